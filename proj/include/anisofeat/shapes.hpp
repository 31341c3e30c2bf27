#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <deque>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "anisofeat/core.hpp"
#include "anisofeat/parallel.hpp"
#include "anisofeat/rng.hpp"

namespace anisofeat {

using Vec3 = std::array<double, 3>;

// Voxelized 3D shape. Occupancy is row-major with axis 2 fastest; voxel
// (i0,i1,i2) sits at physical coordinate (i0*sp0, i1*sp1, i2*sp2), so
// subsampled grids keep the surviving voxels at their original physical
// positions.
struct VoxelShape {
    std::array<int, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::vector<std::uint8_t> occupancy;   // 0/1 per voxel

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }

    std::size_t flat(int i0, int i1, int i2) const {
        return (static_cast<std::size_t>(i0) * dims[1] + i1) * dims[2] + i2;
    }

    std::size_t occupied_count() const {
        std::size_t n = 0;
        for (auto v : occupancy) n += v;
        return n;
    }

    // Physical coordinates of occupied voxels, in flat-index order.
    std::vector<Vec3> coords() const {
        std::vector<Vec3> out;
        out.reserve(occupied_count());
        std::size_t idx = 0;
        for (int i0 = 0; i0 < dims[0]; ++i0)
            for (int i1 = 0; i1 < dims[1]; ++i1)
                for (int i2 = 0; i2 < dims[2]; ++i2, ++idx)
                    if (occupancy[idx])
                        out.push_back(Vec3{i0 * spacing[0], i1 * spacing[1], i2 * spacing[2]});
        return out;
    }

    // Flat occupancy indices, for table-lookup encoders.
    std::vector<std::size_t> occupied_indices() const {
        std::vector<std::size_t> out;
        out.reserve(occupied_count());
        for (std::size_t i = 0; i < occupancy.size(); ++i)
            if (occupancy[i]) out.push_back(i);
        return out;
    }
};

struct FeretPair {
    double min_fd = 0.0;
    double max_fd = 0.0;
};

// A shape the model sees plus the diameters of the shape it came from.
struct ShapeSample {
    VoxelShape shape;
    FeretPair target;

    std::vector<Vec3> coords() const { return shape.coords(); }
};

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

namespace detail {

// Z-Y-X intrinsic rotation.
inline std::array<Vec3, 3> rotation_matrix(const Vec3& euler) {
    const double ca = std::cos(euler[0]), sa = std::sin(euler[0]);
    const double cb = std::cos(euler[1]), sb = std::sin(euler[1]);
    const double cc = std::cos(euler[2]), sc = std::sin(euler[2]);
    return {Vec3{ca * cb, ca * sb * sc - sa * cc, ca * sb * cc + sa * sc},
            Vec3{sa * cb, sa * sb * sc + ca * cc, sa * sb * cc - ca * sc},
            Vec3{-sb, cb * sc, cb * cc}};
}

}  // namespace detail

// Rasterizes a rotated ellipsoid centered in the grid: a voxel is occupied
// iff its center lies inside. The rotated ellipsoid must fit inside the
// grid (checked through its axis-aligned bounding box).
inline VoxelShape generate_ellipsoid(const Vec3& semi_axes, const Vec3& euler,
                                     const std::array<int, 3>& grid) {
    for (double a : semi_axes)
        if (!(a > 0.0)) throw std::invalid_argument("generate_ellipsoid: semi-axes must be > 0");
    for (int d : grid)
        if (d < 2) throw std::invalid_argument("generate_ellipsoid: grid too small");

    const auto rot = detail::rotation_matrix(euler);
    const Vec3 center{(grid[0] - 1) / 2.0, (grid[1] - 1) / 2.0, (grid[2] - 1) / 2.0};
    for (int k = 0; k < 3; ++k) {
        // half-extent of the rotated ellipsoid's AABB along axis k
        double e = 0.0;
        for (int i = 0; i < 3; ++i) e += rot[k][i] * rot[k][i] * semi_axes[i] * semi_axes[i];
        e = std::sqrt(e);
        if (e > center[k])
            throw std::invalid_argument("generate_ellipsoid: shape does not fit in grid");
    }

    VoxelShape shape;
    shape.dims = grid;
    shape.occupancy.assign(shape.voxel_count(), 0);
    std::size_t idx = 0, filled = 0;
    for (int i0 = 0; i0 < grid[0]; ++i0)
        for (int i1 = 0; i1 < grid[1]; ++i1)
            for (int i2 = 0; i2 < grid[2]; ++i2, ++idx) {
                const Vec3 d{i0 - center[0], i1 - center[1], i2 - center[2]};
                double q = 0.0;
                for (int i = 0; i < 3; ++i) {
                    // body frame: R^T * d
                    const double y = rot[0][i] * d[0] + rot[1][i] * d[1] + rot[2][i] * d[2];
                    q += (y / semi_axes[i]) * (y / semi_axes[i]);
                }
                if (q <= 1.0) {
                    shape.occupancy[idx] = 1;
                    ++filled;
                }
            }
    if (filled == 0) throw std::runtime_error("generate_ellipsoid: empty rasterization");
    return shape;
}

namespace detail {

// Largest 6-connected component; everything else is cleared in place.
// Returns the size of the kept component.
inline std::size_t keep_largest_component(VoxelShape& shape) {
    const std::size_t n = shape.voxel_count();
    std::vector<std::int32_t> label(n, -1);
    std::int32_t n_labels = 0;
    std::vector<std::size_t> component_size;
    std::deque<std::size_t> queue;

    for (std::size_t start = 0; start < n; ++start) {
        if (!shape.occupancy[start] || label[start] >= 0) continue;
        const std::int32_t id = n_labels++;
        component_size.push_back(0);
        label[start] = id;
        queue.push_back(start);
        while (!queue.empty()) {
            const std::size_t cur = queue.front();
            queue.pop_front();
            ++component_size[id];
            const int i2 = static_cast<int>(cur % shape.dims[2]);
            const int i1 = static_cast<int>((cur / shape.dims[2]) % shape.dims[1]);
            const int i0 = static_cast<int>(cur / (static_cast<std::size_t>(shape.dims[1]) * shape.dims[2]));
            const int di[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
            for (const auto& d : di) {
                const int j0 = i0 + d[0], j1 = i1 + d[1], j2 = i2 + d[2];
                if (j0 < 0 || j1 < 0 || j2 < 0 || j0 >= shape.dims[0] || j1 >= shape.dims[1] ||
                    j2 >= shape.dims[2])
                    continue;
                const std::size_t nb = shape.flat(j0, j1, j2);
                if (shape.occupancy[nb] && label[nb] < 0) {
                    label[nb] = id;
                    queue.push_back(nb);
                }
            }
        }
    }
    if (n_labels == 0) return 0;
    const std::int32_t best = static_cast<std::int32_t>(
        std::max_element(component_size.begin(), component_size.end()) - component_size.begin());
    for (std::size_t i = 0; i < n; ++i)
        shape.occupancy[i] = (label[i] == best) ? 1 : 0;
    return component_size[static_cast<std::size_t>(best)];
}

}  // namespace detail

inline constexpr int kBlobComponents = 12;
inline constexpr std::size_t kMinOccupiedVoxels = 8;

// Random organic shape: thresholded sum of low-frequency sinusoids, largest
// 6-connected component kept. `smoothness` bounds the number of wave cycles
// across the grid (higher = busier surface). Retries up to 10 times if the
// threshold leaves too little behind.
inline VoxelShape generate_blob(RngStream& stream, const std::array<int, 3>& grid,
                                double smoothness = 3.0) {
    for (int d : grid)
        if (d < 4) throw std::invalid_argument("generate_blob: grid too small");
    if (!(smoothness > 0.0)) throw std::invalid_argument("generate_blob: smoothness must be > 0");

    const int max_dim = std::max({grid[0], grid[1], grid[2]});
    for (int attempt = 0; attempt < 10; ++attempt) {
        struct Wave {
            Vec3 freq;
            double amplitude, phase;
        };
        std::vector<Wave> waves(kBlobComponents);
        for (auto& w : waves) {
            Vec3 g{gaussian(stream, 0.0, 1.0), gaussian(stream, 0.0, 1.0),
                   gaussian(stream, 0.0, 1.0)};
            const double norm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
            const double cycles = stream.uniform(0.5, std::max(0.75, smoothness));
            for (int i = 0; i < 3; ++i) w.freq[i] = (norm > 0 ? g[i] / norm : 0.0) * cycles / max_dim;
            w.amplitude = stream.uniform(0.5, 1.5);
            w.phase = stream.uniform(0.0, kTwoPi);
        }
        const double occupancy_target = stream.uniform(0.05, 0.18);

        VoxelShape shape;
        shape.dims = grid;
        std::vector<double> field(shape.voxel_count());
        std::size_t idx = 0;
        for (int i0 = 0; i0 < grid[0]; ++i0)
            for (int i1 = 0; i1 < grid[1]; ++i1)
                for (int i2 = 0; i2 < grid[2]; ++i2, ++idx) {
                    double v = 0.0;
                    for (const auto& w : waves)
                        v += w.amplitude *
                             std::sin(kTwoPi * (w.freq[0] * i0 + w.freq[1] * i1 + w.freq[2] * i2) +
                                      w.phase);
                    field[idx] = v;
                }

        std::vector<double> sorted = field;
        const auto cut = static_cast<std::size_t>(
            (1.0 - occupancy_target) * static_cast<double>(sorted.size()));
        std::nth_element(sorted.begin(), sorted.begin() + cut, sorted.end());
        const double threshold = sorted[cut];

        shape.occupancy.resize(field.size());
        for (std::size_t i = 0; i < field.size(); ++i)
            shape.occupancy[i] = field[i] > threshold ? 1 : 0;

        if (detail::keep_largest_component(shape) >= kMinOccupiedVoxels) return shape;
    }
    throw std::runtime_error("generate_blob: could not produce a non-degenerate shape");
}

// Keeps slices {0, factor, 2*factor, ...} along `axis` and stretches the
// spacing by the same factor, so surviving voxels keep their physical
// coordinates.
inline VoxelShape simulate_anisotropy(const VoxelShape& shape, int factor, int axis) {
    if (factor < 1) throw std::invalid_argument("simulate_anisotropy: factor must be >= 1");
    if (axis < 0 || axis > 2) throw std::invalid_argument("simulate_anisotropy: axis out of range");
    if (factor >= shape.dims[axis])
        throw std::invalid_argument("simulate_anisotropy: factor >= grid extent");
    if (factor == 1) return shape;

    VoxelShape out;
    out.dims = shape.dims;
    out.dims[axis] = (shape.dims[axis] + factor - 1) / factor;
    out.spacing = shape.spacing;
    out.spacing[axis] *= factor;
    out.occupancy.assign(out.voxel_count(), 0);
    for (int i0 = 0; i0 < out.dims[0]; ++i0)
        for (int i1 = 0; i1 < out.dims[1]; ++i1)
            for (int i2 = 0; i2 < out.dims[2]; ++i2) {
                std::array<int, 3> src{i0, i1, i2};
                src[axis] *= factor;
                out.occupancy[out.flat(i0, i1, i2)] = shape.occupancy[shape.flat(src[0], src[1], src[2])];
            }
    return out;
}

// ---------------------------------------------------------------------------
// Feret oracle
// ---------------------------------------------------------------------------

namespace detail {

// Keeps, for every distinct (y,z), only the points with extreme x. Interior
// points of a column lie on the segment between its extremes, so no convex
// hull vertex (hence neither diameter endpoint nor any directional extreme)
// is dropped.
inline std::vector<Vec3> column_extremes(std::span<const Vec3> pts) {
    struct Key {
        std::uint64_t a, b;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            return RngStream::mix64(k.a ^ RngStream::mix64(k.b));
        }
    };
    std::unordered_map<Key, std::pair<std::size_t, std::size_t>, KeyHash> columns;
    columns.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Key k{std::bit_cast<std::uint64_t>(pts[i][1]), std::bit_cast<std::uint64_t>(pts[i][2])};
        auto [it, inserted] = columns.try_emplace(k, i, i);
        if (!inserted) {
            if (pts[i][0] < pts[it->second.first][0]) it->second.first = i;
            if (pts[i][0] > pts[it->second.second][0]) it->second.second = i;
        }
    }
    std::vector<std::size_t> keep;
    keep.reserve(2 * columns.size());
    for (const auto& [k, mm] : columns) {
        keep.push_back(mm.first);
        if (mm.second != mm.first) keep.push_back(mm.second);
    }
    std::sort(keep.begin(), keep.end());
    std::vector<Vec3> out;
    out.reserve(keep.size());
    for (auto i : keep) out.push_back(pts[i]);
    return out;
}

inline double directional_width(std::span<const Vec3> pts, const Vec3& u) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& p : pts) {
        const double d = u[0] * p[0] + u[1] * p[1] + u[2] * p[2];
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return hi - lo;
}

inline Vec3 normalized(const Vec3& v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    return Vec3{v[0] / n, v[1] / n, v[2] / n};
}

// Pattern search on the sphere: probe 8 tangent offsets at radius rho,
// expand on meaningful improvement, halve otherwise. The width of a finite
// point set is piecewise smooth with kinks, so expansion is needed to step
// over shallow micro-minima near the basin floor; improvements below a
// relative 1e-12 do not reset the radius, which bounds the loop.
inline void refine_min_width(std::span<const Vec3> pts, Vec3& u, double& w, double rho0) {
    double rho = rho0;
    int iterations = 0;
    while (rho > 1e-9 && iterations++ < 500) {
        const Vec3 aux = std::fabs(u[2]) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
        const Vec3 e1 = normalized(Vec3{u[1] * aux[2] - u[2] * aux[1],
                                        u[2] * aux[0] - u[0] * aux[2],
                                        u[0] * aux[1] - u[1] * aux[0]});
        const Vec3 e2{u[1] * e1[2] - u[2] * e1[1], u[2] * e1[0] - u[0] * e1[2],
                      u[0] * e1[1] - u[1] * e1[0]};
        constexpr double kDiag = 0.7071067811865476;
        const double dirs[8][2] = {{1, 0},         {-1, 0},         {0, 1},          {0, -1},
                                   {kDiag, kDiag}, {kDiag, -kDiag}, {-kDiag, kDiag}, {-kDiag, -kDiag}};
        bool improved = false;
        for (const auto& d : dirs) {
            const Vec3 cand =
                normalized(Vec3{u[0] + rho * (d[0] * e1[0] + d[1] * e2[0]),
                                u[1] + rho * (d[0] * e1[1] + d[1] * e2[1]),
                                u[2] + rho * (d[0] * e1[2] + d[1] * e2[2])});
            const double cw = directional_width(pts, cand);
            if (cw < w) {
                if (cw < w * (1.0 - 1e-12)) improved = true;
                w = cw;
                u = cand;
            }
        }
        rho = improved ? std::min(rho * 1.6, rho0) : rho * 0.5;
    }
}

}  // namespace detail

inline constexpr int kDefaultFeretDirections = 2000;

// Feret diameters of a point set.
//   max_fd: exact maximum pairwise distance, computed on the column-extreme
//           reduction of the input (lossless for this purpose).
//   min_fd: minimum directional width over a Fibonacci lattice of
//           n_directions unit vectors (poles included), then sharpened by a
//           shrinking pattern search around the best direction.
inline FeretPair feret_oracle(std::span<const Vec3> points,
                              int n_directions = kDefaultFeretDirections) {
    if (points.size() < 2) throw std::invalid_argument("feret_oracle: need at least 2 points");
    if (n_directions < 500)
        throw std::invalid_argument("feret_oracle: n_directions must be >= 500");

    const std::vector<Vec3> pts = detail::column_extremes(points);

    FeretPair out;
    double max_sq = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const double dx = pts[i][0] - pts[j][0];
            const double dy = pts[i][1] - pts[j][1];
            const double dz = pts[i][2] - pts[j][2];
            max_sq = std::max(max_sq, dx * dx + dy * dy + dz * dz);
        }
    out.max_fd = std::sqrt(max_sq);

    // Fibonacci lattice scan, z from +1 to -1 so both poles are sampled.
    const double golden_angle = kTwoPi * 0.5 * (3.0 - std::sqrt(5.0));
    std::vector<Vec3> dirs(static_cast<std::size_t>(n_directions));
    std::vector<double> widths(static_cast<std::size_t>(n_directions));
    std::vector<std::size_t> rank(static_cast<std::size_t>(n_directions));
    for (int k = 0; k < n_directions; ++k) {
        const double z = 1.0 - 2.0 * k / static_cast<double>(n_directions - 1);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * k;
        dirs[static_cast<std::size_t>(k)] = Vec3{r * std::cos(phi), r * std::sin(phi), z};
        widths[static_cast<std::size_t>(k)] = detail::directional_width(pts, dirs[static_cast<std::size_t>(k)]);
        rank[static_cast<std::size_t>(k)] = static_cast<std::size_t>(k);
    }
    std::sort(rank.begin(), rank.end(),
              [&](std::size_t a, std::size_t b) { return widths[a] < widths[b]; });

    // Multi-start refinement: the hull of a voxel set has several near-tied
    // local width minima, so a single descent may miss the global one. Seed
    // from the best lattice directions that are mutually well separated.
    constexpr int kMaxStarts = 12;
    constexpr double kMinSeparation = 0.94;   // cos(~20 degrees), antipodes identified
    const double rho0 = 2.0 / std::sqrt(static_cast<double>(n_directions));
    std::vector<Vec3> starts;
    for (std::size_t i = 0; i < rank.size() && starts.size() < kMaxStarts; ++i) {
        const Vec3& u = dirs[rank[i]];
        bool distinct = true;
        for (const auto& s : starts)
            if (std::fabs(s[0] * u[0] + s[1] * u[1] + s[2] * u[2]) > kMinSeparation)
                distinct = false;
        if (distinct) starts.push_back(u);
    }
    double best_w = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        Vec3 u = start;
        double w = detail::directional_width(pts, u);
        detail::refine_min_width(pts, u, w, rho0);
        best_w = std::min(best_w, w);
    }

    out.min_fd = best_w;
    return out;
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

struct DatasetConfig {
    int n = 1000;
    std::array<int, 3> grid{48, 48, 48};
    double spacing_mm = 1.0;
    int anisotropy_factor = 1;
    int anisotropy_axis = 0;
    std::array<double, 3> split{0.7, 0.15, 0.15};
    int feret_directions = kDefaultFeretDirections;
    double blob_smoothness = 3.0;
};

struct Dataset {
    DatasetConfig config;
    std::uint64_t seed = 0;
    std::vector<ShapeSample> train, val, test;

    std::size_t size() const { return train.size() + val.size() + test.size(); }
};

inline std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& split) {
    const double sum = split[0] + split[1] + split[2];
    if (!(sum > 0.999 && sum < 1.001) || split[0] <= 0.0 || split[1] < 0.0 || split[2] < 0.0)
        throw std::invalid_argument("split_sizes: fractions must be nonnegative and sum to 1");
    const auto n_train = static_cast<std::size_t>(std::llround(split[0] * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::llround(split[1] * static_cast<double>(n)));
    if (n_train + n_val > n) throw std::invalid_argument("split_sizes: rounding exceeded n");
    return {n_train, n_val, n - n_train - n_val};
}

namespace detail {

inline constexpr std::uint64_t kSplitStreamId = 0xA11D5EEDull;

// One synthetic sample: even indices ellipsoids, odd indices blobs. Targets
// come from the full-resolution shape; the stored shape is the degraded one.
inline ShapeSample make_sample(RngStream sub, std::size_t index, const DatasetConfig& cfg) {
    VoxelShape base;
    if (index % 2 == 0) {
        const double min_dim = static_cast<double>(std::min({cfg.grid[0], cfg.grid[1], cfg.grid[2]}));
        const double budget = 0.5 * (min_dim - 1.0) - 0.5;   // AABB cap after rotation
        Vec3 axes;
        for (int attempt = 0;; ++attempt) {
            for (auto& a : axes) a = sub.uniform(0.09 * min_dim, 0.30 * min_dim);
            if (std::sqrt(axes[0] * axes[0] + axes[1] * axes[1] + axes[2] * axes[2]) <= budget)
                break;
            if (attempt >= 100) {
                for (auto& a : axes) a = 0.15 * min_dim;
                break;
            }
        }
        const Vec3 euler{sub.uniform(0.0, kTwoPi), sub.uniform(0.0, 0.5 * kTwoPi),
                         sub.uniform(0.0, kTwoPi)};
        base = generate_ellipsoid(axes, euler, cfg.grid);
    } else {
        base = generate_blob(sub, cfg.grid, cfg.blob_smoothness);
    }
    base.spacing = {cfg.spacing_mm, cfg.spacing_mm, cfg.spacing_mm};

    ShapeSample sample;
    const auto base_coords = base.coords();
    sample.target = feret_oracle(base_coords, cfg.feret_directions);
    sample.shape = simulate_anisotropy(base, cfg.anisotropy_factor, cfg.anisotropy_axis);
    return sample;
}

}  // namespace detail

// n synthetic shapes with targets measured before degradation, split
// train/val/test by a seeded shuffle. Deterministic for a given
// (stream.seed, config); sample generation is independent per index.
inline Dataset build_dataset(const RngStream& stream, const DatasetConfig& cfg, int jobs = 1) {
    if (cfg.n < 10) throw std::invalid_argument("build_dataset: n must be >= 10");
    for (int d : cfg.grid)
        if (d < 4 || d > 64)
            throw std::invalid_argument("build_dataset: grid extents must be in [4, 64]");
    if (!(cfg.spacing_mm > 0.0)) throw std::invalid_argument("build_dataset: spacing must be > 0");

    const auto n = static_cast<std::size_t>(cfg.n);
    std::vector<ShapeSample> samples(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        samples[i] = detail::make_sample(stream.fork(i), i, cfg);
    });

    // seeded shuffle, then contiguous split
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    RngStream shuffle_stream = stream.fork(detail::kSplitStreamId);
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(shuffle_stream.uniform_index(i + 1));
        std::swap(order[i], order[j]);
    }

    const auto sizes = split_sizes(n, cfg.split);
    Dataset ds;
    ds.config = cfg;
    ds.seed = stream.seed;
    ds.train.reserve(sizes[0]);
    ds.val.reserve(sizes[1]);
    ds.test.reserve(sizes[2]);
    std::size_t k = 0;
    for (std::size_t i = 0; i < sizes[0]; ++i) ds.train.push_back(std::move(samples[order[k++]]));
    for (std::size_t i = 0; i < sizes[1]; ++i) ds.val.push_back(std::move(samples[order[k++]]));
    for (std::size_t i = 0; i < sizes[2]; ++i) ds.test.push_back(std::move(samples[order[k++]]));
    return ds;
}

// ---------------------------------------------------------------------------
// Persistence: meta.json + one little-endian binary file per sample
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr char kSampleMagic[8] = {'A', 'F', 'E', 'A', 'T', 'V', 'O', 'X'};

template <typename T>
void write_raw(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_raw(std::ifstream& f, T& v) {
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace detail

// Layout (little-endian): magic "AFEATVOX", u32 version, i32 dims[3],
// f64 spacing[3], f64 min_fd, f64 max_fd, packed occupancy bits (row-major,
// LSB first), ceil(voxels/8) bytes.
inline void save_sample(const ShapeSample& sample, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_sample: cannot open " + path);
    f.write(detail::kSampleMagic, 8);
    detail::write_raw(f, std::uint32_t{1});
    for (int d : sample.shape.dims) detail::write_raw(f, static_cast<std::int32_t>(d));
    for (double s : sample.shape.spacing) detail::write_raw(f, s);
    detail::write_raw(f, sample.target.min_fd);
    detail::write_raw(f, sample.target.max_fd);
    const std::size_t nvox = sample.shape.voxel_count();
    std::vector<std::uint8_t> packed((nvox + 7) / 8, 0);
    for (std::size_t i = 0; i < nvox; ++i)
        if (sample.shape.occupancy[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    f.write(reinterpret_cast<const char*>(packed.data()),
            static_cast<std::streamsize>(packed.size()));
    if (!f) throw std::runtime_error("save_sample: write failed for " + path);
}

inline ShapeSample load_sample(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_sample: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, detail::kSampleMagic, 8) != 0)
        throw std::runtime_error("load_sample: bad magic in " + path);
    std::uint32_t version = 0;
    detail::read_raw(f, version);
    if (version != 1) throw std::runtime_error("load_sample: unsupported version");
    ShapeSample sample;
    for (auto& d : sample.shape.dims) {
        std::int32_t v = 0;
        detail::read_raw(f, v);
        d = v;
    }
    for (auto& s : sample.shape.spacing) detail::read_raw(f, s);
    detail::read_raw(f, sample.target.min_fd);
    detail::read_raw(f, sample.target.max_fd);
    const std::size_t nvox = sample.shape.voxel_count();
    std::vector<std::uint8_t> packed((nvox + 7) / 8, 0);
    f.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
    if (!f) throw std::runtime_error("load_sample: truncated file " + path);
    sample.shape.occupancy.resize(nvox);
    for (std::size_t i = 0; i < nvox; ++i)
        sample.shape.occupancy[i] = (packed[i / 8] >> (i % 8)) & 1u;
    return sample;
}

}  // namespace anisofeat
