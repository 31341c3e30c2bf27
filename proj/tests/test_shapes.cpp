#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <vector>

#include "anisofeat/dataset_io.hpp"
#include "anisofeat/shapes.hpp"

using namespace anisofeat;
namespace fs = std::filesystem;

namespace {

std::vector<Vec3> apply_rigid(const std::vector<Vec3>& pts, const Vec3& euler, const Vec3& shift) {
    const double ca = std::cos(euler[0]), sa = std::sin(euler[0]);
    const double cb = std::cos(euler[1]), sb = std::sin(euler[1]);
    const double cc = std::cos(euler[2]), sc = std::sin(euler[2]);
    const double R[3][3] = {{ca * cb, ca * sb * sc - sa * cc, ca * sb * cc + sa * sc},
                            {sa * cb, sa * sb * sc + ca * cc, sa * sb * cc - ca * sc},
                            {-sb, cb * sc, cb * cc}};
    std::vector<Vec3> out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (int r = 0; r < 3; ++r)
            out[i][r] = R[r][0] * pts[i][0] + R[r][1] * pts[i][1] + R[r][2] * pts[i][2] + shift[r];
    return out;
}

}  // namespace

TEST_CASE("feret oracle on two points") {
    const std::vector<Vec3> pts{{0, 0, 0}, {3, 4, 0}};
    const auto fd = feret_oracle(pts, 2000);
    CHECK(fd.max_fd == doctest::Approx(5.0).epsilon(1e-12));
    // collinear pair: min width collapses towards zero, well below the
    // pi/n_directions angular bound
    CHECK(fd.min_fd <= 5.0 * 3.14159265358979 / 2000.0);

    CHECK_THROWS_AS(feret_oracle(std::vector<Vec3>{{1, 2, 3}}, 2000), std::invalid_argument);
    CHECK_THROWS_AS(feret_oracle(pts, 100), std::invalid_argument);
}

TEST_CASE("feret oracle on the unit cube corners") {
    std::vector<Vec3> corners;
    for (int i = 0; i < 8; ++i)
        corners.push_back(Vec3{static_cast<double>(i & 1), static_cast<double>((i >> 1) & 1),
                               static_cast<double>((i >> 2) & 1)});
    const auto fd = feret_oracle(corners, 2000);
    CHECK(fd.max_fd == std::sqrt(3.0));   // exact pairwise distance
    CHECK(fd.min_fd == doctest::Approx(1.0).epsilon(0.005));
    CHECK(fd.min_fd >= 1.0 - 1e-12);      // width of the cube is never below 1
}

TEST_CASE("axis-aligned ellipsoid (10,4,4) in a 64-grid") {
    const auto shape = generate_ellipsoid(Vec3{10, 4, 4}, Vec3{0, 0, 0}, {64, 64, 64});
    const auto fd = feret_oracle(shape.coords(), 2000);
    const double voxel_diag = std::sqrt(3.0);
    CHECK(std::fabs(fd.max_fd - 20.0) <= voxel_diag);
    CHECK(std::fabs(fd.min_fd - 8.0) <= voxel_diag);
}

TEST_CASE("sphere: max diameter ~ 2r and rotation-invariant occupancy") {
    const double r = 9.0;
    const auto sphere = generate_ellipsoid(Vec3{r, r, r}, Vec3{0, 0, 0}, {48, 48, 48});
    const auto fd = feret_oracle(sphere.coords(), 2000);
    CHECK(std::fabs(fd.max_fd - 2.0 * r) <= std::sqrt(3.0));

    const double base_count = static_cast<double>(sphere.occupied_count());
    RngStream s{314, 0};
    for (int rep = 0; rep < 10; ++rep) {
        const Vec3 euler{s.uniform(0, kTwoPi), s.uniform(0, kTwoPi), s.uniform(0, kTwoPi)};
        const auto rotated = generate_ellipsoid(Vec3{r, r, r}, euler, {48, 48, 48});
        const double count = static_cast<double>(rotated.occupied_count());
        CHECK(std::fabs(count - base_count) / base_count < 0.01);
    }
}

TEST_CASE("ellipsoid fit and degeneracy checks") {
    CHECK_THROWS_AS(generate_ellipsoid(Vec3{40, 4, 4}, Vec3{0, 0, 0}, {64, 64, 64}),
                    std::invalid_argument);
    // rotated long axis exceeding the grid must also be rejected
    CHECK_THROWS_AS(generate_ellipsoid(Vec3{4, 38, 4}, Vec3{0.15, 0.05, 0.02}, {64, 64, 64}),
                    std::invalid_argument);
    CHECK_THROWS_AS(generate_ellipsoid(Vec3{0.0, 4, 4}, Vec3{0, 0, 0}, {32, 32, 32}),
                    std::invalid_argument);
}

TEST_CASE("min feret converges in the direction count") {
    RngStream s{2718, 0};
    for (int rep = 0; rep < 20; ++rep) {
        const Vec3 axes{s.uniform(4.0, 12.0), s.uniform(4.0, 12.0), s.uniform(4.0, 12.0)};
        const Vec3 euler{s.uniform(0, kTwoPi), s.uniform(0, kTwoPi), s.uniform(0, kTwoPi)};
        const auto shape = generate_ellipsoid(axes, euler, {40, 40, 40});
        const auto coords = shape.coords();
        const auto coarse = feret_oracle(coords, 2000);
        const auto fine = feret_oracle(coords, 4000);
        CHECK(std::fabs(fine.min_fd - coarse.min_fd) / coarse.min_fd < 0.002);
        CHECK(fine.max_fd == coarse.max_fd);
    }
}

TEST_CASE("oracle is invariant under rigid motion within direction resolution") {
    const auto shape = generate_ellipsoid(Vec3{11, 6, 4}, Vec3{0.3, 0.8, 0.2}, {40, 40, 40});
    const auto coords = shape.coords();
    const auto fd = feret_oracle(coords, 2000);
    RngStream s{99, 0};
    for (int rep = 0; rep < 5; ++rep) {
        const Vec3 euler{s.uniform(0, kTwoPi), s.uniform(0, kTwoPi), s.uniform(0, kTwoPi)};
        const Vec3 shift{s.uniform(-30, 30), s.uniform(-30, 30), s.uniform(-30, 30)};
        const auto moved = apply_rigid(coords, euler, shift);
        const auto fd2 = feret_oracle(moved, 2000);
        CHECK(std::fabs(fd2.max_fd - fd.max_fd) / fd.max_fd < 0.005);
        CHECK(std::fabs(fd2.min_fd - fd.min_fd) / fd.min_fd < 0.005);
    }
}

TEST_CASE("oracle scale equivariance") {
    const auto shape = generate_ellipsoid(Vec3{9, 5, 7}, Vec3{0.5, 0.2, 0.9}, {36, 36, 36});
    const auto coords = shape.coords();
    const auto fd = feret_oracle(coords, 1000);

    std::vector<Vec3> doubled(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i)
        for (int k = 0; k < 3; ++k) doubled[i][k] = 2.0 * coords[i][k];
    const auto fd2 = feret_oracle(doubled, 1000);
    CHECK(fd2.max_fd == 2.0 * fd.max_fd);   // power-of-two scaling is exact
    CHECK(fd2.min_fd == 2.0 * fd.min_fd);

    std::vector<Vec3> scaled(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i)
        for (int k = 0; k < 3; ++k) scaled[i][k] = 1.7 * coords[i][k];
    const auto fd17 = feret_oracle(scaled, 1000);
    CHECK(fd17.max_fd == doctest::Approx(1.7 * fd.max_fd).epsilon(1e-12));
    CHECK(fd17.min_fd == doctest::Approx(1.7 * fd.min_fd).epsilon(1e-9));

    CHECK(fd.min_fd <= fd.max_fd);
}

TEST_CASE("blob generation: reproducible, connected, reasonable occupancy") {
    RngStream a{777, 0};
    RngStream b{777, 0};
    const auto blob1 = generate_blob(a, {32, 32, 32}, 3.0);
    const auto blob2 = generate_blob(b, {32, 32, 32}, 3.0);
    CHECK(blob1.occupancy == blob2.occupancy);

    // occupancy fraction calibrated over 100 seeds; each blob is a single
    // 6-connected component by construction
    RngStream root{31337, 0};
    for (int seed = 0; seed < 100; ++seed) {
        RngStream s = root.fork(static_cast<std::uint64_t>(seed));
        auto blob = generate_blob(s, {24, 24, 24}, 3.0);
        const double frac = static_cast<double>(blob.occupied_count()) /
                            static_cast<double>(blob.voxel_count());
        CHECK(frac >= 0.01);
        CHECK(frac <= 0.5);
        const std::size_t before = blob.occupied_count();
        CHECK(detail::keep_largest_component(blob) == before);
    }
}

TEST_CASE("anisotropy simulation: extents, spacing, identity, errors") {
    VoxelShape v;
    v.dims = {64, 64, 64};
    v.occupancy.assign(v.voxel_count(), 1);
    const auto f4 = simulate_anisotropy(v, 4, 0);
    CHECK(f4.dims == std::array<int, 3>{16, 64, 64});
    CHECK(f4.spacing[0] == 4.0);
    CHECK(f4.spacing[1] == 1.0);
    const auto f6 = simulate_anisotropy(v, 6, 0);
    CHECK(f6.dims == std::array<int, 3>{11, 64, 64});

    const auto blob = [] {
        RngStream s{5, 0};
        return generate_blob(s, {20, 20, 20}, 3.0);
    }();
    const auto same = simulate_anisotropy(blob, 1, 0);
    CHECK(same.occupancy == blob.occupancy);
    CHECK(same.spacing == blob.spacing);

    CHECK_THROWS_AS(simulate_anisotropy(v, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(simulate_anisotropy(v, 64, 0), std::invalid_argument);
    CHECK_THROWS_AS(simulate_anisotropy(v, 2, 3), std::invalid_argument);
}

TEST_CASE("anisotropic subsampling preserves surviving physical coordinates") {
    RngStream s{15, 0};
    auto blob = generate_blob(s, {30, 30, 30}, 3.0);
    blob.spacing = {1.0, 1.0, 1.0};
    const auto degraded = simulate_anisotropy(blob, 3, 0);
    CHECK(degraded.spacing[0] == 3.0);

    std::set<std::array<double, 3>> original;
    for (const auto& c : blob.coords()) original.insert(c);
    for (const auto& c : degraded.coords()) {
        CHECK(original.count(c) == 1);
        CHECK(std::fmod(c[0], 3.0) == 0.0);
    }
}

TEST_CASE("split sizes: 1000 at (0.7, 0.15, 0.15) is 700/150/150") {
    const auto sizes = split_sizes(1000, {0.7, 0.15, 0.15});
    CHECK(sizes == std::array<std::size_t, 3>{700, 150, 150});
    CHECK_THROWS_AS(split_sizes(100, {0.5, 0.2, 0.2}), std::invalid_argument);
}

TEST_CASE("build_dataset: counts, determinism, target invariance to anisotropy") {
    DatasetConfig cfg;
    cfg.n = 40;
    cfg.grid = {24, 24, 24};
    cfg.anisotropy_factor = 3;
    cfg.feret_directions = 500;
    const RngStream stream{1234, 0};
    const auto ds = build_dataset(stream, cfg, 2);
    CHECK(ds.train.size() == 28);
    CHECK(ds.val.size() == 6);
    CHECK(ds.test.size() == 6);
    for (const auto& s : ds.train) {
        CHECK(s.target.min_fd > 0.0);
        CHECK(s.target.min_fd <= s.target.max_fd);
        CHECK(s.shape.spacing[0] == 3.0);
        CHECK(s.shape.dims[0] == 8);
    }

    const auto ds_again = build_dataset(stream, cfg, 1);
    for (std::size_t i = 0; i < ds.train.size(); ++i) {
        CHECK(ds.train[i].target.min_fd == ds_again.train[i].target.min_fd);
        CHECK(ds.train[i].shape.occupancy == ds_again.train[i].shape.occupancy);
    }

    // targets come from the pre-degradation shape, so they do not move with
    // the anisotropy factor
    DatasetConfig iso = cfg;
    iso.anisotropy_factor = 1;
    const auto ds_iso = build_dataset(stream, iso, 2);
    for (std::size_t i = 0; i < ds.train.size(); ++i) {
        CHECK(ds.train[i].target.min_fd == ds_iso.train[i].target.min_fd);
        CHECK(ds.train[i].target.max_fd == ds_iso.train[i].target.max_fd);
    }

    DatasetConfig bad = cfg;
    bad.n = 5;
    CHECK_THROWS_AS(build_dataset(stream, bad, 1), std::invalid_argument);
}

TEST_CASE("dataset directory round-trip: meta.json plus one binary per sample") {
    DatasetConfig cfg;
    cfg.n = 12;
    cfg.grid = {16, 16, 16};
    cfg.anisotropy_factor = 2;
    cfg.feret_directions = 500;
    cfg.split = {0.5, 0.25, 0.25};
    const auto ds = build_dataset(RngStream{31, 0}, cfg, 2);

    const auto dir = fs::temp_directory_path() / "anisofeat_dataset_test";
    fs::remove_all(dir);
    save_dataset(ds, dir.string());
    CHECK(fs::exists(dir / "meta.json"));
    CHECK(fs::exists(dir / "train_00000.bin"));

    const auto loaded = load_dataset(dir.string());
    fs::remove_all(dir);
    REQUIRE(loaded.train.size() == ds.train.size());
    REQUIRE(loaded.val.size() == ds.val.size());
    REQUIRE(loaded.test.size() == ds.test.size());
    CHECK(loaded.config.anisotropy_factor == 2);
    CHECK(loaded.config.grid == cfg.grid);
    for (std::size_t i = 0; i < ds.train.size(); ++i) {
        CHECK(loaded.train[i].shape.occupancy == ds.train[i].shape.occupancy);
        CHECK(loaded.train[i].shape.spacing == ds.train[i].shape.spacing);
        CHECK(loaded.train[i].target.min_fd == ds.train[i].target.min_fd);
        CHECK(loaded.train[i].target.max_fd == ds.train[i].target.max_fd);
    }
}

TEST_CASE("sample binary round-trip") {
    RngStream s{88, 0};
    ShapeSample sample;
    sample.shape = generate_blob(s, {18, 20, 22}, 3.0);
    sample.shape.spacing = {2.0, 1.0, 1.0};
    sample.target = {4.25, 9.75};

    const auto path = fs::temp_directory_path() / "anisofeat_sample_test.bin";
    save_sample(sample, path.string());
    const auto loaded = load_sample(path.string());
    fs::remove(path);

    CHECK(loaded.shape.dims == sample.shape.dims);
    CHECK(loaded.shape.spacing == sample.shape.spacing);
    CHECK(loaded.shape.occupancy == sample.shape.occupancy);
    CHECK(loaded.target.min_fd == sample.target.min_fd);
    CHECK(loaded.target.max_fd == sample.target.max_fd);
}
