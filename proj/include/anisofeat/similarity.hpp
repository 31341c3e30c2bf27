#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "anisofeat/core.hpp"

namespace anisofeat {

// A patch grid plus the reference patch similarities are computed against.
// The default reference is the central patch, floor(shape/2) per axis.
struct GridSpec {
    std::vector<int> shape;
    Position reference;

    GridSpec() : GridSpec(std::vector<int>{1}) {}

    explicit GridSpec(std::vector<int> shape_in, Position ref = {})
        : shape(std::move(shape_in)), reference(std::move(ref)) {
        if (shape.empty()) throw std::invalid_argument("GridSpec: empty shape");
        for (int s : shape)
            if (s <= 0) throw std::invalid_argument("GridSpec: all extents must be positive");
        if (reference.empty()) {
            reference.resize(shape.size());
            for (std::size_t i = 0; i < shape.size(); ++i)
                reference[i] = static_cast<double>(shape[i] / 2);
        }
        if (reference.size() != shape.size())
            throw std::invalid_argument("GridSpec: reference rank mismatch");
        for (std::size_t i = 0; i < shape.size(); ++i)
            if (reference[i] < 0.0 || reference[i] > static_cast<double>(shape[i] - 1))
                throw std::invalid_argument("GridSpec: reference outside grid");
    }

    std::size_t rank() const { return shape.size(); }

    std::size_t cells() const {
        std::size_t n = 1;
        for (int s : shape) n *= static_cast<std::size_t>(s);
        return n;
    }
};

enum class Normalization { Raw, MinMax };

struct SimilarityMap {
    GridSpec grid;
    std::vector<double> values;   // row-major over grid.shape
    Normalization normalization = Normalization::Raw;
};

// values[q] = dot(enc(reference), enc(q)) over every grid cell q, visited
// row-major. `encode` is any Position -> Encoding callable.
template <typename EncodeFn>
SimilarityMap compute_map(EncodeFn&& encode, const GridSpec& grid) {
    const Encoding ref = encode(grid.reference);
    SimilarityMap map{grid, std::vector<double>(grid.cells(), 0.0), Normalization::Raw};

    const std::size_t rank = grid.rank();
    Position q(rank, 0.0);
    std::vector<int> idx(rank, 0);
    for (std::size_t flat = 0; flat < map.values.size(); ++flat) {
        for (std::size_t i = 0; i < rank; ++i) q[i] = static_cast<double>(idx[i]);
        const Encoding e = encode(q);
        if (e.size() != ref.size())
            throw std::runtime_error("compute_map: encoder width changed across cells");
        double acc = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i) acc += ref[i] * e[i];
        map.values[flat] = acc;
        // odometer increment, last axis fastest
        for (std::size_t i = rank; i-- > 0;) {
            if (++idx[i] < grid.shape[i]) break;
            idx[i] = 0;
        }
    }
    return map;
}

// Rescales values to [0,1]; a constant map normalizes to all zeros.
inline SimilarityMap minmax_normalized(const SimilarityMap& map) {
    SimilarityMap out = map;
    out.normalization = Normalization::MinMax;
    if (map.values.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(map.values.begin(), map.values.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi == lo) {
        std::fill(out.values.begin(), out.values.end(), 0.0);
        return out;
    }
    for (auto& v : out.values) v = (v - lo) / (hi - lo);
    return out;
}

namespace detail {
inline void write_pgm_plane(const std::string& path, int height, int width,
                            const double* values) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_pgm: cannot open " + path);
    f << "P5\n" << width << " " << height << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(width));
    for (int i = 0; i < height; ++i) {
        for (int j = 0; j < width; ++j) {
            const double v = values[static_cast<std::size_t>(i) * width + j];
            row[static_cast<std::size_t>(j)] =
                static_cast<unsigned char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
        }
        f.write(reinterpret_cast<const char*>(row.data()), width);
    }
    if (!f) throw std::runtime_error("write_pgm: write failed for " + path);
}
}  // namespace detail

// Binary 8-bit PGM (P5, maxval 255), pixel = round(255*v), row-major.
// Requires a MinMax-normalized map. 1D maps are written as a single row;
// 3D maps as one file per leading-axis slice with a _sNNN suffix.
// Returns the list of files written.
inline std::vector<std::string> write_pgm(const SimilarityMap& map, const std::string& path) {
    if (map.normalization != Normalization::MinMax)
        throw std::invalid_argument("write_pgm: map must be MinMax-normalized");
    const auto& shape = map.grid.shape;
    std::vector<std::string> written;
    if (shape.size() == 1) {
        detail::write_pgm_plane(path, 1, shape[0], map.values.data());
        written.push_back(path);
    } else if (shape.size() == 2) {
        detail::write_pgm_plane(path, shape[0], shape[1], map.values.data());
        written.push_back(path);
    } else if (shape.size() == 3) {
        const std::string stem =
            path.size() > 4 && path.substr(path.size() - 4) == ".pgm"
                ? path.substr(0, path.size() - 4)
                : path;
        const std::size_t plane = static_cast<std::size_t>(shape[1]) * shape[2];
        for (int k = 0; k < shape[0]; ++k) {
            char suffix[32];
            std::snprintf(suffix, sizeof(suffix), "_s%03d.pgm", k);
            const std::string slice_path = stem + suffix;
            detail::write_pgm_plane(slice_path, shape[1], shape[2],
                                    map.values.data() + static_cast<std::size_t>(k) * plane);
            written.push_back(slice_path);
        }
    } else {
        throw std::invalid_argument("write_pgm: only 1D/2D/3D grids supported");
    }
    return written;
}

// CSV with header i,j[,k],value; raw values at 17 significant digits.
inline void write_csv(const SimilarityMap& map, const std::string& path) {
    const auto& shape = map.grid.shape;
    if (shape.size() > 3)
        throw std::invalid_argument("write_csv: only 1D/2D/3D grids supported");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_csv: cannot open " + path);
    static const char* headers[] = {"i,value\n", "i,j,value\n", "i,j,k,value\n"};
    f << headers[shape.size() - 1];

    std::vector<int> idx(shape.size(), 0);
    char num[40];
    for (std::size_t flat = 0; flat < map.values.size(); ++flat) {
        for (std::size_t i = 0; i < idx.size(); ++i) f << idx[i] << ',';
        std::snprintf(num, sizeof(num), "%.17g", map.values[flat]);
        f << num << '\n';
        for (std::size_t i = idx.size(); i-- > 0;) {
            if (++idx[i] < shape[i]) break;
            idx[i] = 0;
        }
    }
    if (!f) throw std::runtime_error("write_csv: write failed for " + path);
}

}  // namespace anisofeat
