#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace anisofeat {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// An m-dimensional coordinate: patch-grid indices by default, physical
// units if the caller pre-scaled them.
using Position = std::vector<double>;

// A D-dimensional encoding vector.
using Encoding = std::vector<double>;

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Dense row-major matrix of doubles. Just enough surface for frequency
// bases, MLP weights and lookup tables; no linear-algebra library needed
// at this scale.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Per-dimension standard deviations s = (s_1,...,s_m) parameterizing the
// anisotropic Fourier basis. Every entry must be strictly positive.
class ScaleVector {
public:
    ScaleVector() = default;

    explicit ScaleVector(std::vector<double> scales) : s_(std::move(scales)) {
        if (s_.empty())
            throw std::invalid_argument("ScaleVector: must have at least one entry");
        for (double v : s_)
            if (!(v > 0.0) || !std::isfinite(v))
                throw std::invalid_argument("ScaleVector: every scale must be finite and > 0");
    }

    static ScaleVector uniform(std::size_t m, double s) {
        return ScaleVector(std::vector<double>(m, s));
    }

    std::size_t size() const { return s_.size(); }
    double operator[](std::size_t i) const { return s_[i]; }
    const std::vector<double>& values() const { return s_; }

    bool all_equal() const {
        for (double v : s_)
            if (v != s_.front()) return false;
        return true;
    }

private:
    std::vector<double> s_;
};

}  // namespace anisofeat
