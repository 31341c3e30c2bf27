#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "anisofeat/encoding.hpp"

using namespace anisofeat;

namespace {

EncodingConfig make_cfg(int dims, int m, std::uint64_t seed = 42) {
    EncodingConfig cfg;
    cfg.dims = dims;
    cfg.spatial_dims = m;
    cfg.seed = seed;
    return cfg;
}

double expected_iso_kernel(double s, double dist_sq) {
    return std::exp(-2.0 * kTwoPi * kTwoPi / 4.0 * s * s * dist_sq);
}

}  // namespace

TEST_CASE("spe at the origin is the [0,1,0,1,...] pattern") {
    const auto cfg = make_cfg(24, 3);
    const Encoding e = spe_encode(Position{0.0, 0.0, 0.0}, 1.0e4, cfg);
    for (std::size_t i = 0; i < e.size(); ++i)
        CHECK(e[i] == (i % 2 == 0 ? 0.0 : 1.0));
}

TEST_CASE("spe m=1 D=4 t=1e4 p=1 matches direct evaluation") {
    // pair k=0: exponent 0 -> arg 1; pair k=1: exponent 2/4 -> arg 1e-2
    const auto cfg = make_cfg(4, 1);
    const Encoding e = spe_encode(Position{1.0}, 1.0e4, cfg);
    REQUIRE(e.size() == 4);
    CHECK(e[0] == doctest::Approx(0.8414709848078965).epsilon(1e-15));    // sin(1)
    CHECK(e[1] == doctest::Approx(0.5403023058681398).epsilon(1e-15));    // cos(1)
    CHECK(e[2] == doctest::Approx(0.009999833334166664).epsilon(1e-15));  // sin(0.01)
    CHECK(e[3] == doctest::Approx(0.9999500004166653).epsilon(1e-15));    // cos(0.01)
}

TEST_CASE("spe default temperature is 1e4") {
    CHECK(kDefaultSpeTemperature == 1.0e4);
    const auto cfg = make_cfg(8, 1);
    CHECK(spe_encode(Position{2.5}, cfg) == spe_encode(Position{2.5}, 1.0e4, cfg));
}

TEST_CASE("spe rejects bad widths, temperatures and positions") {
    CHECK_THROWS_AS(spe_encode(Position{0.0, 0.0}, 10.0, make_cfg(6, 2)), std::invalid_argument);
    CHECK_THROWS_AS(spe_encode(Position{0.0}, 0.0, make_cfg(4, 1)), std::invalid_argument);
    CHECK_THROWS_AS(spe_encode(Position{std::nan("")}, 10.0, make_cfg(4, 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(spe_encode(Position{0.0}, 10.0, make_cfg(4, 2)), std::invalid_argument);
}

TEST_CASE("isotropic basis sampling is deterministic and validates s") {
    const auto cfg = make_cfg(64, 2, 7);
    const auto a = sample_basis_isotropic(1.0, cfg);
    const auto b = sample_basis_isotropic(1.0, cfg);
    CHECK(a.freq.data == b.freq.data);
    CHECK(a.origin == BasisOrigin::SampledIsotropic);
    CHECK(a.freq.rows == 2);
    CHECK(a.freq.cols == 32);
    CHECK_THROWS_AS(sample_basis_isotropic(0.0, cfg), std::invalid_argument);
    CHECK_THROWS_AS(sample_basis_isotropic(-0.5, cfg), std::invalid_argument);
}

TEST_CASE("isotropic basis sample mean within 3 standard errors at s=0.5") {
    // 10 rows x 100k cols = 1e6 entries
    const auto cfg = make_cfg(200'000, 10, 99);
    const auto basis = sample_basis_isotropic(0.5, cfg);
    double sum = 0.0;
    for (double v : basis.freq.data) sum += v;
    const double mean = sum / static_cast<double>(basis.freq.size());
    CHECK(std::fabs(mean) < 3.0 * 0.5 / 1000.0);
}

TEST_CASE("anisotropic basis: per-row std, shape validation, paper scale vectors") {
    const auto cfg = make_cfg(100'000, 2, 5);
    const ScaleVector s(std::vector<double>{0.497, 1.125});
    const auto basis = sample_basis_anisotropic(s, cfg);
    CHECK(basis.origin == BasisOrigin::SampledAnisotropic);
    for (std::size_t row = 0; row < 2; ++row) {
        double sumsq = 0.0;
        for (std::size_t j = 0; j < basis.freq.cols; ++j)
            sumsq += basis.freq(row, j) * basis.freq(row, j);
        const double stdev = std::sqrt(sumsq / static_cast<double>(basis.freq.cols));
        CHECK(stdev == doctest::Approx(s[row]).epsilon(0.02));
    }

    CHECK_NOTHROW(sample_basis_anisotropic(ScaleVector({0.785, 0.111, 0.111}), make_cfg(32, 3)));
    CHECK_THROWS_AS(sample_basis_anisotropic(ScaleVector({1.0, 1.0, 1.0}), cfg),
                    std::invalid_argument);
}

TEST_CASE("all-equal anisotropic scales reproduce isotropic sampling bitwise") {
    const auto cfg = make_cfg(256, 3, 2026);
    const double c = 0.73;
    const auto iso = sample_basis_isotropic(c, cfg);
    const auto aniso = sample_basis_anisotropic(ScaleVector::uniform(3, c), cfg);
    CHECK(iso.freq.data == aniso.freq.data);
}

TEST_CASE("fourier encode of the zero position") {
    const auto cfg = make_cfg(32, 2);
    const auto basis = sample_basis_isotropic(1.0, cfg);
    const Encoding e = fourier_encode(Position{0.0, 0.0}, basis);
    for (std::size_t j = 0; j < 16; ++j) {
        CHECK(e[j] == 0.0);
        CHECK(e[16 + j] == 1.0);
    }
    CHECK(squared_norm(e) == doctest::Approx(16.0));
}

TEST_CASE("fourier squared norm is D/2 for random positions") {
    const auto cfg = make_cfg(128, 3, 11);
    const auto basis = sample_basis_isotropic(0.8, cfg);
    RngStream s{55, 0};
    for (int rep = 0; rep < 100; ++rep) {
        const Position p{s.uniform(-20.0, 20.0), s.uniform(-20.0, 20.0), s.uniform(-20.0, 20.0)};
        const double n2 = squared_norm(fourier_encode(p, basis));
        CHECK(std::fabs(n2 - 64.0) <= 1e-9 * 128.0);
    }
}

TEST_CASE("fourier dot product equals the sum-of-cosines identity") {
    const auto cfg = make_cfg(128, 3, 21);
    const auto basis = sample_basis_isotropic(0.5, cfg);
    RngStream s{66, 0};
    for (int rep = 0; rep < 20; ++rep) {
        Position p(3), q(3);
        for (int i = 0; i < 3; ++i) {
            p[i] = s.uniform(-5.0, 5.0);
            q[i] = s.uniform(-5.0, 5.0);
        }
        const double d = dot(fourier_encode(p, basis), fourier_encode(q, basis));
        double expect = 0.0;
        for (std::size_t j = 0; j < basis.freq.cols; ++j) {
            double arg = 0.0;
            for (int i = 0; i < 3; ++i) arg += basis.freq(i, j) * (p[i] - q[i]);
            expect += std::cos(kTwoPi * arg);
        }
        CHECK(d == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("single matched frequency: quarter-cycle offset is orthogonal") {
    // both columns (0.25, 0): dot = 2*cos(pi/2) = 0 at offset (1,0)
    FourierBasis basis;
    basis.freq = Matrix(2, 2);
    basis.freq(0, 0) = 0.25;
    basis.freq(0, 1) = 0.25;
    basis.origin = BasisOrigin::SampledIsotropic;
    const double d = dot(fourier_encode(Position{1.0, 0.0}, basis),
                         fourier_encode(Position{0.0, 0.0}, basis));
    CHECK(std::fabs(d) < 1e-12);
}

TEST_CASE("stationarity: dot depends only on the position difference") {
    const auto cfg = make_cfg(64, 2, 31);
    const auto basis = sample_basis_isotropic(0.4, cfg);
    RngStream s{77, 0};
    for (int rep = 0; rep < 100; ++rep) {
        Position p(2), q(2), shift(2);
        for (int i = 0; i < 2; ++i) {
            p[i] = s.uniform(-10.0, 10.0);
            q[i] = s.uniform(-10.0, 10.0);
            shift[i] = s.uniform(-10.0, 10.0);
        }
        Position ps{p[0] + shift[0], p[1] + shift[1]};
        Position qs{q[0] + shift[0], q[1] + shift[1]};
        const double d0 = dot(fourier_encode(p, basis), fourier_encode(q, basis));
        const double d1 = dot(fourier_encode(ps, basis), fourier_encode(qs, basis));
        CHECK(std::fabs(d0 - d1) < 1e-9);
    }

    // same property for the sinusoidal family
    const auto scfg = make_cfg(32, 2);
    for (int rep = 0; rep < 100; ++rep) {
        Position p(2), q(2), shift(2);
        for (int i = 0; i < 2; ++i) {
            p[i] = s.uniform(-10.0, 10.0);
            q[i] = s.uniform(-10.0, 10.0);
            shift[i] = s.uniform(-10.0, 10.0);
        }
        Position ps{p[0] + shift[0], p[1] + shift[1]};
        Position qs{q[0] + shift[0], q[1] + shift[1]};
        const double d0 = dot(spe_encode(p, scfg), spe_encode(q, scfg));
        const double d1 = dot(spe_encode(ps, scfg), spe_encode(qs, scfg));
        CHECK(std::fabs(d0 - d1) < 1e-9);
    }
}

TEST_CASE("isotropic kernel limit: normalized dot approximates the Gaussian kernel") {
    const int half = 8192;
    const double tol = 4.0 / std::sqrt(static_cast<double>(half));
    for (double s : {0.1, 0.5, 1.0}) {
        const auto cfg = make_cfg(2 * half, 2, 1234);
        const auto basis = sample_basis_isotropic(s, cfg);
        const Position ref{0.0, 0.0};
        const Encoding eref = fourier_encode(ref, basis);
        const double offsets[][2] = {{1, 0}, {0, 1}, {1, 1}, {2, 1}, {0, 3}};
        for (const auto& o : offsets) {
            const Position q{o[0], o[1]};
            const double got = dot(eref, fourier_encode(q, basis)) / half;
            const double want = expected_iso_kernel(s, o[0] * o[0] + o[1] * o[1]);
            CHECK(std::fabs(got - want) < tol);
        }
    }
}

TEST_CASE("anisotropic kernel limit: per-dimension scales shape the decay") {
    const int half = 8192;
    const double tol = 4.0 / std::sqrt(static_cast<double>(half));
    const auto cfg = make_cfg(2 * half, 2, 4321);
    const ScaleVector s(std::vector<double>{0.1, 0.3});
    const auto basis = sample_basis_anisotropic(s, cfg);
    const Encoding eref = fourier_encode(Position{0.0, 0.0}, basis);
    const double offsets[][2] = {{1, 0}, {0, 1}, {2, 0}, {0, 2}, {1, 1}, {3, 2}};
    for (const auto& o : offsets) {
        const double got = dot(eref, fourier_encode(Position{o[0], o[1]}, basis)) / half;
        const double want = std::exp(-2.0 * kTwoPi * kTwoPi / 4.0 *
                                     (s[0] * s[0] * o[0] * o[0] + s[1] * s[1] * o[1] * o[1]));
        CHECK(std::fabs(got - want) < tol);
    }
}

TEST_CASE("afpe scale rule: s_i = 0.5 * anisotropy_i") {
    const auto a = afpe_scale_from_anisotropy({4.0, 1.0, 1.0});
    CHECK(a[0] == 2.0);
    CHECK(a[1] == 0.5);
    CHECK(a[2] == 0.5);

    const auto b = afpe_scale_from_anisotropy({1.0, 1.0, 1.0, 1.0});
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(b[i] == 0.5);

    const auto c = afpe_scale_from_anisotropy({8.0, 1.0, 1.0});
    CHECK(c[0] == 4.0);
    CHECK(c[1] == 0.5);
    CHECK(c[2] == 0.5);

    CHECK_THROWS_AS(afpe_scale_from_anisotropy({0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("lfpe init: trainable standard-Gaussian basis, same forward as fourier_encode") {
    const auto cfg = make_cfg(200'000, 10, 123);
    const auto basis = lfpe_init(cfg);
    CHECK(basis.trainable());
    double sumsq = 0.0;
    for (double v : basis.freq.data) sumsq += v * v;
    const double stdev = std::sqrt(sumsq / static_cast<double>(basis.freq.size()));
    CHECK(stdev == doctest::Approx(1.0).epsilon(0.003));

    const auto small = make_cfg(16, 2, 5);
    const auto w = lfpe_init(small);
    FourierBasis plain = w;
    plain.origin = BasisOrigin::SampledIsotropic;
    const Position p{1.5, -0.5};
    CHECK(fourier_encode(p, w) == fourier_encode(p, plain));
}

TEST_CASE("learnable table: lookup, determinism, grid sizing, bounds") {
    LearnableTable tbl(14 * 14, 8, 77);
    CHECK(tbl.entries.rows == 196);   // 224^2 image at 16^2 patches
    CHECK(tbl.entries.cols == 8);
    CHECK(learnable_table_lookup(tbl, 0) == learnable_table_lookup(tbl, 0));
    CHECK_THROWS_AS(learnable_table_lookup(tbl, 196), std::out_of_range);

    LearnableTable again(14 * 14, 8, 77);
    CHECK(tbl.entries.data == again.entries.data);
}

TEST_CASE("none encoding is the additive identity") {
    const auto cfg = make_cfg(12, 3);
    const Encoding z = none_encode(Position{4.0, 5.0, 6.0}, cfg);
    CHECK(z == Encoding(12, 0.0));
    CHECK(squared_norm(z) == 0.0);
    const auto basis = sample_basis_isotropic(1.0, make_cfg(12, 3));
    CHECK(dot(z, fourier_encode(Position{1.0, 2.0, 3.0}, basis)) == 0.0);
}

TEST_CASE("spe similarity is exactly separable across dimensions") {
    const auto cfg2 = make_cfg(64, 2);
    const auto cfg1 = make_cfg(32, 1);
    RngStream s{88, 0};
    for (int rep = 0; rep < 25; ++rep) {
        const Position p{s.uniform(-8.0, 8.0), s.uniform(-8.0, 8.0)};
        const Position q{s.uniform(-8.0, 8.0), s.uniform(-8.0, 8.0)};
        const double joint = dot(spe_encode(p, cfg2), spe_encode(q, cfg2));
        const double split = dot(spe_encode(Position{p[0]}, cfg1), spe_encode(Position{q[0]}, cfg1)) +
                             dot(spe_encode(Position{p[1]}, cfg1), spe_encode(Position{q[1]}, cfg1));
        CHECK(joint == doctest::Approx(split).epsilon(1e-12));
    }
}

TEST_CASE("spe diagonal similarity disagrees with any radial fit of the axis profile") {
    // If the sinusoidal kernel were a function of |delta| alone, the value at
    // (k,k) would match the axis profile interpolated at k*sqrt(2).
    const auto cfg = make_cfg(64, 2);
    auto norm_sim = [&](double d0, double d1) {
        return dot(spe_encode(Position{0.0, 0.0}, cfg), spe_encode(Position{d0, d1}, cfg)) / 32.0;
    };
    std::vector<double> axis(12);
    for (int j = 0; j < 12; ++j) axis[static_cast<std::size_t>(j)] = norm_sim(j, 0.0);

    double max_gap = 0.0;
    for (int k = 1; k <= 7; ++k) {
        const double r = k * std::sqrt(2.0);
        const int lo = static_cast<int>(r);
        const double frac = r - lo;
        const double radial = axis[static_cast<std::size_t>(lo)] * (1.0 - frac) +
                              axis[static_cast<std::size_t>(lo + 1)] * frac;
        max_gap = std::max(max_gap, std::fabs(norm_sim(k, k) - radial));
    }
    CHECK(max_gap > 0.02);
}
