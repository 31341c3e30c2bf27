#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "anisofeat/rng.hpp"

using namespace anisofeat;

TEST_CASE("identical (seed, counter) states replay identical draws") {
    RngStream a{123, 0};
    RngStream b{123, 0};
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

    RngStream c{123, 500};
    RngStream d{123, 0};
    for (int i = 0; i < 500; ++i) d.next_u64();
    CHECK(c.next_u64() == d.next_u64());
}

TEST_CASE("gaussian consumes exactly two counter increments per draw") {
    RngStream s{7, 0};
    gaussian(s, 0.0, 1.0);
    CHECK(s.counter == 2);
    gaussian(s, 0.0, 1.0);
    CHECK(s.counter == 4);
}

TEST_CASE("gaussian determinism and parameter validation") {
    RngStream a{99, 0};
    RngStream b{99, 0};
    CHECK(gaussian(a, 1.5, 2.0) == gaussian(b, 1.5, 2.0));
    RngStream s{1, 0};
    CHECK_THROWS_AS(gaussian(s, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(gaussian(s, 0.0, -1.0), std::invalid_argument);
}

TEST_CASE("gaussian sample std over 1e6 draws within 0.5% of requested") {
    RngStream s{2024, 0};
    const int n = 1'000'000;
    const double want = 0.7;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = gaussian(s, 0.0, want);
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double stdev = std::sqrt(sumsq / n - mean * mean);
    CHECK(stdev == doctest::Approx(want).epsilon(0.005));
    // standard error of the mean: 3 sigma band
    CHECK(std::fabs(mean) < 3.0 * want / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("gaussian with tiny std clusters at the mean") {
    RngStream s{5, 0};
    for (int i = 0; i < 100; ++i)
        CHECK(gaussian(s, 5.0, 1e-300) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("resample_indices basics") {
    RngStream s{11, 0};
    CHECK(resample_indices(s, 1) == std::vector<std::size_t>{0});

    RngStream a{12, 0}, b{12, 0};
    CHECK(resample_indices(a, 1000) == resample_indices(b, 1000));

    RngStream c{13, 0};
    for (auto i : resample_indices(c, 37)) CHECK(i < 37);

    CHECK_THROWS_AS(resample_indices(s, 0), std::invalid_argument);
}

TEST_CASE("resample_indices covers ~1-1/e distinct indices") {
    RngStream s{77, 0};
    const std::size_t n = 100'000;
    const auto idx = resample_indices(s, n);
    std::vector<char> seen(n, 0);
    std::size_t distinct = 0;
    for (auto i : idx)
        if (!seen[i]) {
            seen[i] = 1;
            ++distinct;
        }
    const double frac = static_cast<double>(distinct) / static_cast<double>(n);
    CHECK(frac == doctest::Approx(1.0 - 1.0 / std::exp(1.0)).epsilon(0.016));
}

TEST_CASE("random_scale_vector degenerate and bounds") {
    RngStream s{3, 0};
    const auto sv = random_scale_vector(s, 4, 0.25, 0.25);
    for (std::size_t i = 0; i < sv.size(); ++i) CHECK(sv[i] == 0.25);

    RngStream t{4, 0};
    for (int rep = 0; rep < 200; ++rep) {
        const auto v = random_scale_vector(t, 3, 0.05, 5.0);
        for (std::size_t i = 0; i < v.size(); ++i) {
            CHECK(v[i] >= 0.05);
            CHECK(v[i] <= 5.0);
        }
    }

    CHECK_THROWS_AS(random_scale_vector(t, 2, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(random_scale_vector(t, 2, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("default search box contains the known optimal scales") {
    // every tuned per-dimension scale in use lands inside (0.05, 5.0)
    const double known[] = {0.497, 1.125, 0.785, 0.111, 0.5, 1.0, 1.5, 2.5, 4.0};
    for (double v : known) {
        CHECK(v > 0.05);
        CHECK(v < 5.0);
    }
}

TEST_CASE("random_scale_vector log-uniform median ~ sqrt(low*high)") {
    RngStream s{91, 0};
    const double lo = 0.05, hi = 5.0;
    std::vector<double> draws;
    draws.reserve(10'000);
    for (int i = 0; i < 10'000; ++i) draws.push_back(random_scale_vector(s, 1, lo, hi)[0]);
    std::nth_element(draws.begin(), draws.begin() + draws.size() / 2, draws.end());
    const double median = draws[draws.size() / 2];
    CHECK(median == doctest::Approx(std::sqrt(lo * hi)).epsilon(0.05));
}

TEST_CASE("forked sub-streams pass a chi-square uniformity check") {
    // 10^5 draws into 256 bins; chi2(255) 99th percentile is ~310.46
    RngStream root{42, 0};
    for (std::uint64_t id : {0ull, 1ull, 17ull}) {
        RngStream sub = root.fork(id);
        const int n = 100'000, bins = 256;
        std::vector<int> hist(bins, 0);
        for (int i = 0; i < n; ++i)
            ++hist[static_cast<int>(sub.uniform_index(bins))];
        const double expected = static_cast<double>(n) / bins;
        double chi2 = 0.0;
        for (int c : hist) chi2 += (c - expected) * (c - expected) / expected;
        CHECK(chi2 < 310.46);
    }
}

TEST_CASE("forks depend on id, not on parent progress") {
    RngStream a{10, 0};
    RngStream b{10, 0};
    b.next_u64();
    b.next_u64();
    CHECK(a.fork(5).seed == b.fork(5).seed);
    CHECK(a.fork(5).seed != a.fork(6).seed);
}

TEST_CASE("uniform01 stays in [0,1) and open-low in (0,1]") {
    RngStream s{8, 0};
    for (int i = 0; i < 10'000; ++i) {
        const double u = s.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    RngStream t{9, 0};
    for (int i = 0; i < 10'000; ++i) {
        const double u = t.uniform01_open_low();
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
    }
}
