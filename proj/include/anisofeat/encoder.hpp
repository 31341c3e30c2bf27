#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "anisofeat/encoding.hpp"

namespace anisofeat {

enum class EncoderFamily { Spe, Ifpe, Lfpe, Afpe, Learnable, None };

inline EncoderFamily parse_encoder_family(const std::string& name) {
    if (name == "spe") return EncoderFamily::Spe;
    if (name == "ifpe") return EncoderFamily::Ifpe;
    if (name == "lfpe") return EncoderFamily::Lfpe;
    if (name == "afpe") return EncoderFamily::Afpe;
    if (name == "learnable") return EncoderFamily::Learnable;
    if (name == "none") return EncoderFamily::None;
    throw std::invalid_argument("unknown encoder family: " + name);
}

inline std::string encoder_family_name(EncoderFamily f) {
    switch (f) {
        case EncoderFamily::Spe: return "spe";
        case EncoderFamily::Ifpe: return "ifpe";
        case EncoderFamily::Lfpe: return "lfpe";
        case EncoderFamily::Afpe: return "afpe";
        case EncoderFamily::Learnable: return "learnable";
        case EncoderFamily::None: return "none";
    }
    return "?";
}

struct EncoderSpec {
    EncoderFamily family = EncoderFamily::Ifpe;
    int dims = 128;
    double temperature = kDefaultSpeTemperature;   // SPE
    double scale = kDefaultIsotropicScale;         // IFPE
    std::vector<double> scales;                    // AFPE, one per spatial dim
    std::uint64_t seed = 42;
};

// Grid geometry a table-lookup encoder needs to turn a position back into
// a row index. Unused by the analytic families.
struct GridContext {
    std::vector<int> dims;
    std::vector<double> spacing;
};

// One configured positional encoder; immutable during encoding. The
// trainable families (LFPE basis, Learnable table) expose their parameters
// for the training loop to update between passes.
class Encoder {
public:
    Encoder(const EncoderSpec& spec, int spatial_dims, GridContext grid = {})
        : spec_(spec), grid_(std::move(grid)) {
        cfg_.dims = spec.dims;
        cfg_.spatial_dims = spatial_dims;
        cfg_.seed = spec.seed;
        switch (spec_.family) {
            case EncoderFamily::Spe:
                cfg_.validate_spe();
                break;
            case EncoderFamily::Ifpe:
                basis_ = sample_basis_isotropic(spec_.scale, cfg_);
                break;
            case EncoderFamily::Lfpe:
                basis_ = lfpe_init(cfg_);
                break;
            case EncoderFamily::Afpe: {
                if (spec_.scales.size() != static_cast<std::size_t>(spatial_dims))
                    throw std::invalid_argument("Encoder: afpe needs one scale per spatial dim");
                basis_ = sample_basis_anisotropic(ScaleVector(spec_.scales), cfg_);
                break;
            }
            case EncoderFamily::Learnable: {
                if (grid_.dims.size() != static_cast<std::size_t>(spatial_dims) ||
                    grid_.spacing.size() != grid_.dims.size())
                    throw std::invalid_argument("Encoder: learnable needs a grid context");
                std::size_t cells = 1;
                for (int d : grid_.dims) {
                    if (d <= 0) throw std::invalid_argument("Encoder: bad grid extent");
                    cells *= static_cast<std::size_t>(d);
                }
                table_ = LearnableTable(cells, static_cast<std::size_t>(spec.dims), spec.seed);
                break;
            }
            case EncoderFamily::None:
                cfg_.validate();
                break;
        }
    }

    EncoderFamily family() const { return spec_.family; }
    const EncoderSpec& spec() const { return spec_; }
    const EncodingConfig& config() const { return cfg_; }
    int dims() const { return cfg_.dims; }
    int spatial_dims() const { return cfg_.spatial_dims; }

    bool trainable() const {
        return spec_.family == EncoderFamily::Lfpe || spec_.family == EncoderFamily::Learnable;
    }

    Encoding encode(const Position& p) const {
        switch (spec_.family) {
            case EncoderFamily::Spe: return spe_encode(p, spec_.temperature, cfg_);
            case EncoderFamily::Ifpe:
            case EncoderFamily::Lfpe:
            case EncoderFamily::Afpe: return fourier_encode(p, basis_);
            case EncoderFamily::Learnable: return learnable_table_lookup(table_, grid_index_of(p));
            case EncoderFamily::None: return none_encode(p, cfg_);
        }
        throw std::logic_error("Encoder: unreachable");
    }

    // Nearest grid cell of a physical position, row-major flattened.
    std::size_t grid_index_of(const Position& p) const {
        if (p.size() != grid_.dims.size())
            throw std::invalid_argument("grid_index_of: rank mismatch");
        std::size_t flat = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const auto idx = static_cast<long long>(std::llround(p[i] / grid_.spacing[i]));
            if (idx < 0 || idx >= grid_.dims[i])
                throw std::out_of_range("grid_index_of: position outside grid");
            flat = flat * static_cast<std::size_t>(grid_.dims[i]) + static_cast<std::size_t>(idx);
        }
        return flat;
    }

    FourierBasis& basis() { return basis_; }
    const FourierBasis& basis() const { return basis_; }
    LearnableTable& table() { return table_; }
    const LearnableTable& table() const { return table_; }
    const GridContext& grid() const { return grid_; }

    std::size_t trainable_parameter_count() const {
        if (spec_.family == EncoderFamily::Lfpe) return basis_.freq.size();
        if (spec_.family == EncoderFamily::Learnable) return table_.entries.size();
        return 0;
    }

private:
    EncoderSpec spec_;
    EncodingConfig cfg_;
    GridContext grid_;
    FourierBasis basis_;
    LearnableTable table_;
};

}  // namespace anisofeat
