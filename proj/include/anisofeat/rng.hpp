#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "anisofeat/core.hpp"

namespace anisofeat {

// Counter-based deterministic random stream. The n-th output is a pure
// function of (seed, n), so identical (seed, counter) states produce
// identical draws on every platform and independent workers can own
// disjoint forks without coordinating.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;

    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

    // SplitMix64 finalizer (Vigna's public-domain construction).
    static std::uint64_t mix64(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t next_u64() { return mix64(seed + kGolden * ++counter); }

    // Derives an independent sub-stream keyed by `id`. Depends only on
    // (seed, id), never on how far this stream has advanced.
    RngStream fork(std::uint64_t id) const {
        return RngStream{mix64(seed ^ mix64(kGolden ^ (id * 0xD1B54A32D192ED03ull))), 0};
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe as a log() argument.
    double uniform01_open_low() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Unbiased-to-2^-64 index in [0, n) via 128-bit multiply-shift.
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }
};

// One N(mean, std^2) draw via the Box-Muller transform. Consumes exactly
// two counter increments per call (u1 then u2); the sine branch is
// discarded so the advance is fixed.
inline double gaussian(RngStream& stream, double mean, double std_dev) {
    if (!(std_dev > 0.0) || !std::isfinite(std_dev))
        throw std::invalid_argument("gaussian: std must be finite and > 0");
    const double u1 = stream.uniform01_open_low();
    const double u2 = stream.uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + std_dev * (r * std::cos(kTwoPi * u2));
}

// n i.i.d. uniform indices in [0, n), with replacement.
inline std::vector<std::size_t> resample_indices(RngStream& stream, std::size_t n) {
    if (n == 0) throw std::invalid_argument("resample_indices: n must be positive");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = static_cast<std::size_t>(stream.uniform_index(n));
    return idx;
}

// Each entry log-uniform on [low, high]. Optimal per-dimension scales span
// an order of magnitude in practice, so the search is done in log space.
inline ScaleVector random_scale_vector(RngStream& stream, std::size_t m,
                                       double low, double high) {
    if (!(low > 0.0) || !(high >= low))
        throw std::invalid_argument("random_scale_vector: need 0 < low <= high");
    std::vector<double> s(m);
    if (low == high) {
        for (auto& v : s) v = low;
        return ScaleVector(std::move(s));
    }
    const double llo = std::log(low), lhi = std::log(high);
    for (auto& v : s) v = std::exp(stream.uniform(llo, lhi));
    return ScaleVector(std::move(s));
}

}  // namespace anisofeat
