#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "anisofeat/core.hpp"
#include "anisofeat/rng.hpp"

namespace anisofeat {

// Width / rank / seed triple shared by every encoding family.
struct EncodingConfig {
    int dims = 0;             // embedding width D
    int spatial_dims = 0;     // position rank m
    std::uint64_t seed = 42;

    void validate() const {
        if (dims <= 0) throw std::invalid_argument("EncodingConfig: dims must be positive");
        if (spatial_dims <= 0)
            throw std::invalid_argument("EncodingConfig: spatial_dims must be positive");
    }

    void validate_fourier() const {
        validate();
        if (dims % 2 != 0)
            throw std::invalid_argument("EncodingConfig: Fourier encodings need even dims");
    }

    void validate_spe() const {
        validate();
        if (dims % (2 * spatial_dims) != 0)
            throw std::invalid_argument(
                "EncodingConfig: sinusoidal encoding needs dims divisible by 2*spatial_dims");
    }
};

inline constexpr double kDefaultSpeTemperature = 1.0e4;
inline constexpr double kDefaultIsotropicScale = 1.0;

namespace detail {
inline void check_position(const Position& p, std::size_t m, const char* who) {
    if (p.size() != m)
        throw std::invalid_argument(std::string(who) + ": position rank mismatch");
    for (double c : p)
        if (!std::isfinite(c))
            throw std::invalid_argument(std::string(who) + ": non-finite position coordinate");
}
}  // namespace detail

// Fixed sinusoidal encoding. Each of the m position components gets a
// contiguous block of D/m slots filled with interleaved sin/cos pairs at
// geometric frequencies: pair k of a block uses argument
// p_i / t^(2k / (D/m)). Blocks are concatenated in dimension order.
inline Encoding spe_encode(const Position& p, double temperature, const EncodingConfig& cfg) {
    cfg.validate_spe();
    detail::check_position(p, static_cast<std::size_t>(cfg.spatial_dims), "spe_encode");
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw std::invalid_argument("spe_encode: temperature must be finite and > 0");

    const int m = cfg.spatial_dims;
    const int block = cfg.dims / m;      // even by precondition
    const int pairs = block / 2;
    Encoding out(static_cast<std::size_t>(cfg.dims));
    for (int i = 0; i < m; ++i) {
        double* dst = out.data() + static_cast<std::size_t>(i) * block;
        for (int k = 0; k < pairs; ++k) {
            const double exponent = 2.0 * k / static_cast<double>(block);
            const double arg = p[static_cast<std::size_t>(i)] / std::pow(temperature, exponent);
            dst[2 * k] = std::sin(arg);
            dst[2 * k + 1] = std::cos(arg);
        }
    }
    return out;
}

inline Encoding spe_encode(const Position& p, const EncodingConfig& cfg) {
    return spe_encode(p, kDefaultSpeTemperature, cfg);
}

enum class BasisOrigin { SampledIsotropic, SampledAnisotropic, Trainable };

// The m x (D/2) frequency matrix of a Fourier encoding, together with how
// it was produced. Sampled variants are a deterministic function of
// (seed, shape, scales); entries are drawn row-major.
struct FourierBasis {
    Matrix freq;                    // rows = m, cols = D/2
    BasisOrigin origin = BasisOrigin::SampledIsotropic;
    std::vector<double> scales;     // per-row std used at sampling time

    std::size_t spatial_dims() const { return freq.rows; }
    std::size_t dims() const { return freq.cols * 2; }
    bool trainable() const { return origin == BasisOrigin::Trainable; }
};

namespace detail {
inline Matrix sample_gaussian_matrix(std::uint64_t seed, std::size_t rows, std::size_t cols,
                                     const std::vector<double>& row_std) {
    Matrix out(rows, cols);
    RngStream stream{seed, 0};
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            out(i, j) = gaussian(stream, 0.0, row_std[i]);
    return out;
}
}  // namespace detail

// Frequencies i.i.d. N(0, s^2); s is a standard deviation.
inline FourierBasis sample_basis_isotropic(double s, const EncodingConfig& cfg) {
    cfg.validate_fourier();
    if (!(s > 0.0) || !std::isfinite(s))
        throw std::invalid_argument("sample_basis_isotropic: s must be finite and > 0");
    const auto m = static_cast<std::size_t>(cfg.spatial_dims);
    const auto half = static_cast<std::size_t>(cfg.dims / 2);
    std::vector<double> row_std(m, s);
    return FourierBasis{detail::sample_gaussian_matrix(cfg.seed, m, half, row_std),
                        BasisOrigin::SampledIsotropic, row_std};
}

// Row i drawn with standard deviation s_i. With all scales equal this is
// bitwise identical to the isotropic sampler under the same seed, because
// both fill the matrix row-major from the same stream.
inline FourierBasis sample_basis_anisotropic(const ScaleVector& s, const EncodingConfig& cfg) {
    cfg.validate_fourier();
    if (s.size() != static_cast<std::size_t>(cfg.spatial_dims))
        throw std::invalid_argument("sample_basis_anisotropic: scale count != spatial_dims");
    const auto m = static_cast<std::size_t>(cfg.spatial_dims);
    const auto half = static_cast<std::size_t>(cfg.dims / 2);
    return FourierBasis{detail::sample_gaussian_matrix(cfg.seed, m, half, s.values()),
                        BasisOrigin::SampledAnisotropic, s.values()};
}

// Trainable basis, initialized from a standard Gaussian. Forward pass is
// identical to the sampled variants; the training loop owns the updates.
inline FourierBasis lfpe_init(const EncodingConfig& cfg) {
    FourierBasis b = sample_basis_isotropic(1.0, cfg);
    b.origin = BasisOrigin::Trainable;
    return b;
}

// [sin(2*pi*B^T p) || cos(2*pi*B^T p)]: first D/2 slots sines, last D/2
// cosines of the same arguments, so the squared norm is exactly D/2.
inline Encoding fourier_encode(const Position& p, const FourierBasis& basis) {
    detail::check_position(p, basis.spatial_dims(), "fourier_encode");
    const std::size_t m = basis.freq.rows;
    const std::size_t half = basis.freq.cols;
    Encoding out(2 * half);
    for (std::size_t j = 0; j < half; ++j) {
        double arg = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            arg += basis.freq(i, j) * p[i];
        arg *= kTwoPi;
        out[j] = std::sin(arg);
        out[half + j] = std::cos(arg);
    }
    return out;
}

// s_i = 0.5 * anisotropy_i: the default rule tying the per-dimension scale
// to the spacing ratio of the data.
inline ScaleVector afpe_scale_from_anisotropy(const std::vector<double>& anisotropy) {
    if (anisotropy.empty())
        throw std::invalid_argument("afpe_scale_from_anisotropy: empty anisotropy");
    std::vector<double> s(anisotropy.size());
    for (std::size_t i = 0; i < anisotropy.size(); ++i) {
        if (!(anisotropy[i] > 0.0) || !std::isfinite(anisotropy[i]))
            throw std::invalid_argument("afpe_scale_from_anisotropy: factors must be > 0");
        s[i] = 0.5 * anisotropy[i];
    }
    return ScaleVector(std::move(s));
}

// P x D table of free per-position vectors, one row per grid cell,
// initialized from a standard Gaussian and updated by gradient descent.
struct LearnableTable {
    Matrix entries;   // P rows, D cols
    std::uint64_t init_seed = 0;

    LearnableTable() = default;
    LearnableTable(std::size_t positions, std::size_t dims, std::uint64_t seed)
        : entries(positions, dims), init_seed(seed) {
        RngStream stream{seed, 0};
        for (auto& v : entries.data) v = gaussian(stream, 0.0, 1.0);
    }
};

inline Encoding learnable_table_lookup(const LearnableTable& tbl, std::size_t grid_index) {
    if (grid_index >= tbl.entries.rows)
        throw std::out_of_range("learnable_table_lookup: grid_index out of range");
    const double* row = tbl.entries.data.data() + grid_index * tbl.entries.cols;
    return Encoding(row, row + tbl.entries.cols);
}

// The no-encoding baseline: the additive identity.
inline Encoding none_encode(const Position& p, const EncodingConfig& cfg) {
    cfg.validate();
    detail::check_position(p, static_cast<std::size_t>(cfg.spatial_dims), "none_encode");
    return Encoding(static_cast<std::size_t>(cfg.dims), 0.0);
}

inline double dot(const Encoding& a, const Encoding& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double squared_norm(const Encoding& a) { return dot(a, a); }

}  // namespace anisofeat
