#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "anisofeat/encoder.hpp"
#include "anisofeat/shapes.hpp"

namespace anisofeat {

// ---------------------------------------------------------------------------
// Shape -> feature vector
// ---------------------------------------------------------------------------

// Mean of the per-coordinate encodings: permutation-invariant and
// size-invariant, so shapes with different voxel counts share one input
// width.
inline Encoding encode_mean(std::span<const Vec3> coords, const Encoder& encoder) {
    if (coords.empty()) throw std::invalid_argument("encode_mean: no coordinates");
    Encoding pooled(static_cast<std::size_t>(encoder.dims()), 0.0);
    Position p(3);
    for (const auto& c : coords) {
        p[0] = c[0];
        p[1] = c[1];
        p[2] = c[2];
        const Encoding e = encoder.encode(p);
        for (std::size_t i = 0; i < pooled.size(); ++i) pooled[i] += e[i];
    }
    const double inv = 1.0 / static_cast<double>(coords.size());
    for (auto& v : pooled) v *= inv;
    return pooled;
}

inline Encoding encode_shape(const ShapeSample& sample, const Encoder& encoder) {
    if (encoder.spatial_dims() != 3)
        throw std::invalid_argument("encode_shape: encoder rank must be 3");
    const auto coords = sample.coords();
    return encode_mean(coords, encoder);
}

// ---------------------------------------------------------------------------
// 3-layer MLP: D -> H -> H -> 2, ReLU hidden activations
// ---------------------------------------------------------------------------

inline constexpr int kDefaultHiddenWidth = 256;
inline constexpr int kOutputDims = 2;   // (min_fd, max_fd)

struct MlpParams {
    Matrix w1;                 // H x D
    std::vector<double> b1;    // H
    Matrix w2;                 // H x H
    std::vector<double> b2;    // H
    Matrix w3;                 // 2 x H
    std::vector<double> b3;    // 2

    static MlpParams init(int input_dims, int hidden, std::uint64_t seed) {
        if (input_dims <= 0 || hidden <= 0)
            throw std::invalid_argument("MlpParams::init: dims must be positive");
        MlpParams p;
        const auto d = static_cast<std::size_t>(input_dims);
        const auto h = static_cast<std::size_t>(hidden);
        p.w1 = Matrix(h, d);
        p.b1.assign(h, 0.0);
        p.w2 = Matrix(h, h);
        p.b2.assign(h, 0.0);
        p.w3 = Matrix(kOutputDims, h);
        p.b3.assign(kOutputDims, 0.0);
        // He-normal weights, uniform +-1/sqrt(fan_in) biases; sampled in
        // declaration order from one stream
        RngStream stream{seed, 0};
        const double s1 = std::sqrt(2.0 / static_cast<double>(d));
        const double s2 = std::sqrt(2.0 / static_cast<double>(h));
        const double r1 = 1.0 / std::sqrt(static_cast<double>(d));
        const double r2 = 1.0 / std::sqrt(static_cast<double>(h));
        for (auto& v : p.w1.data) v = gaussian(stream, 0.0, s1);
        for (auto& v : p.b1) v = stream.uniform(-r1, r1);
        for (auto& v : p.w2.data) v = gaussian(stream, 0.0, s2);
        for (auto& v : p.b2) v = stream.uniform(-r2, r2);
        for (auto& v : p.w3.data) v = gaussian(stream, 0.0, s2);
        for (auto& v : p.b3) v = stream.uniform(-r2, r2);
        return p;
    }

    int input_dims() const { return static_cast<int>(w1.cols); }
    int hidden() const { return static_cast<int>(w1.rows); }

    std::size_t parameter_count() const {
        return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size();
    }
};

// Exact trainable-parameter count of the D -> H -> H -> 2 stack.
inline std::size_t mlp_parameter_count(int input_dims, int hidden) {
    const auto d = static_cast<std::size_t>(input_dims);
    const auto h = static_cast<std::size_t>(hidden);
    return h * d + h + h * h + h + kOutputDims * h + kOutputDims;
}

// Pre-activations kept for the backward pass; rows are batch entries.
struct ForwardCache {
    Matrix x, z1, h1, z2, h2, pred;
};

namespace detail {

// out = x * w^T + b, with x (B x in), w (out_dim x in)
inline void affine(const Matrix& x, const Matrix& w, const std::vector<double>& b, Matrix& out) {
    out = Matrix(x.rows, w.rows);
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double* xr = x.data.data() + r * x.cols;
        double* or_ = out.data.data() + r * out.cols;
        for (std::size_t o = 0; o < w.rows; ++o) {
            const double* wr = w.data.data() + o * w.cols;
            double acc = b[o];
            for (std::size_t i = 0; i < x.cols; ++i) acc += wr[i] * xr[i];
            or_[o] = acc;
        }
    }
}

inline Matrix relu(const Matrix& z) {
    Matrix out = z;
    for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

}  // namespace detail

inline ForwardCache forward(const MlpParams& params, const Matrix& x) {
    if (x.cols != params.w1.cols) throw std::invalid_argument("forward: input width mismatch");
    ForwardCache c;
    c.x = x;
    detail::affine(x, params.w1, params.b1, c.z1);
    c.h1 = detail::relu(c.z1);
    detail::affine(c.h1, params.w2, params.b2, c.z2);
    c.h2 = detail::relu(c.z2);
    detail::affine(c.h2, params.w3, params.b3, c.pred);
    return c;
}

struct MlpGrads {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
    Matrix w3;
    std::vector<double> b3;
    Matrix x;   // gradient wrt the input batch, for trainable encoders
};

// Exact reverse-mode gradients for the forward pass above.
inline MlpGrads backward(const MlpParams& params, const ForwardCache& cache,
                         const Matrix& grad_out) {
    if (!grad_out.same_shape(cache.pred))
        throw std::invalid_argument("backward: grad_out shape mismatch");
    const std::size_t batch = cache.x.rows;
    MlpGrads g;
    g.w1 = Matrix(params.w1.rows, params.w1.cols);
    g.b1.assign(params.b1.size(), 0.0);
    g.w2 = Matrix(params.w2.rows, params.w2.cols);
    g.b2.assign(params.b2.size(), 0.0);
    g.w3 = Matrix(params.w3.rows, params.w3.cols);
    g.b3.assign(params.b3.size(), 0.0);
    g.x = Matrix(cache.x.rows, cache.x.cols);

    Matrix d2(batch, params.w2.rows);   // dL/dz2
    Matrix d1(batch, params.w1.rows);   // dL/dz1

    for (std::size_t r = 0; r < batch; ++r) {
        const double* go = grad_out.data.data() + r * grad_out.cols;
        const double* h2 = cache.h2.data.data() + r * cache.h2.cols;
        const double* z2 = cache.z2.data.data() + r * cache.z2.cols;
        double* d2r = d2.data.data() + r * d2.cols;
        // w3 / b3 and dL/dh2
        for (std::size_t o = 0; o < params.w3.rows; ++o) {
            const double gv = go[o];
            g.b3[o] += gv;
            double* gw = g.w3.data.data() + o * g.w3.cols;
            for (std::size_t i = 0; i < params.w3.cols; ++i) gw[i] += gv * h2[i];
        }
        for (std::size_t i = 0; i < params.w3.cols; ++i) {
            double acc = 0.0;
            for (std::size_t o = 0; o < params.w3.rows; ++o)
                acc += params.w3(o, i) * go[o];
            d2r[i] = z2[i] > 0.0 ? acc : 0.0;
        }

        const double* h1 = cache.h1.data.data() + r * cache.h1.cols;
        const double* z1 = cache.z1.data.data() + r * cache.z1.cols;
        double* d1r = d1.data.data() + r * d1.cols;
        for (std::size_t o = 0; o < params.w2.rows; ++o) {
            const double gv = d2r[o];
            if (gv != 0.0) {
                g.b2[o] += gv;
                double* gw = g.w2.data.data() + o * g.w2.cols;
                for (std::size_t i = 0; i < params.w2.cols; ++i) gw[i] += gv * h1[i];
            }
        }
        for (std::size_t i = 0; i < params.w2.cols; ++i) {
            double acc = 0.0;
            for (std::size_t o = 0; o < params.w2.rows; ++o)
                acc += params.w2(o, i) * d2r[o];
            d1r[i] = z1[i] > 0.0 ? acc : 0.0;
        }

        const double* xr = cache.x.data.data() + r * cache.x.cols;
        double* gx = g.x.data.data() + r * g.x.cols;
        for (std::size_t o = 0; o < params.w1.rows; ++o) {
            const double gv = d1r[o];
            if (gv != 0.0) {
                g.b1[o] += gv;
                double* gw = g.w1.data.data() + o * g.w1.cols;
                for (std::size_t i = 0; i < params.w1.cols; ++i) gw[i] += gv * xr[i];
            }
        }
        for (std::size_t i = 0; i < params.w1.cols; ++i) {
            double acc = 0.0;
            for (std::size_t o = 0; o < params.w1.rows; ++o)
                acc += params.w1(o, i) * d1r[o];
            gx[i] = acc;
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamSlot {
    std::vector<double> m, v;
};

class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void begin_step() { ++step_; }

    void update(std::span<double> param, std::span<const double> grad, AdamSlot& slot) const {
        if (param.size() != grad.size()) throw std::invalid_argument("Adam: size mismatch");
        if (slot.m.size() != param.size()) {
            slot.m.assign(param.size(), 0.0);
            slot.v.assign(param.size(), 0.0);
        }
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
        for (std::size_t i = 0; i < param.size(); ++i) {
            slot.m[i] = cfg_.beta1 * slot.m[i] + (1.0 - cfg_.beta1) * grad[i];
            slot.v[i] = cfg_.beta2 * slot.v[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            const double mh = slot.m[i] / bc1;
            const double vh = slot.v[i] / bc2;
            param[i] -= cfg_.learning_rate * mh / (std::sqrt(vh) + cfg_.epsilon);
        }
    }

    int step() const { return step_; }

private:
    AdamConfig cfg_;
    int step_ = 0;
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
    int epochs = 200;
    int batch_size = 64;
    double learning_rate = 1e-3;
    int hidden = kDefaultHiddenWidth;
    std::uint64_t seed = 42;
    EncoderSpec encoder;

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
        if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
        if (hidden < 1) throw std::invalid_argument("TrainConfig: hidden must be >= 1");
    }
};

struct TrainHistoryRow {
    int epoch = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
};

struct TrainResult {
    MlpParams params;                      // best-validation checkpoint
    std::optional<Encoder> encoder;        // encoder state at the best epoch
    std::vector<TrainHistoryRow> history;
    std::array<double, 2> target_mean{0.0, 0.0};
    std::array<double, 2> target_std{1.0, 1.0};
    int best_epoch = 0;
    double best_val_mse = std::numeric_limits<double>::infinity();
    std::size_t mlp_parameters = 0;
    std::size_t encoder_parameters = 0;
};

namespace detail {

struct SampleFeatures {
    std::vector<Vec3> coords;                 // LFPE path
    std::vector<std::size_t> table_indices;   // Learnable path
    Encoding fixed;                           // precomputed for fixed encoders
};

inline Matrix targets_of(std::span<const ShapeSample> samples) {
    Matrix t(samples.size(), kOutputDims);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        t(i, 0) = samples[i].target.min_fd;
        t(i, 1) = samples[i].target.max_fd;
    }
    return t;
}

// Mean pooling over trig features plus the matching chain-rule pullback
// into the frequency matrix.
inline Encoding lfpe_pooled(const FourierBasis& basis, std::span<const Vec3> coords) {
    const std::size_t half = basis.freq.cols;
    Encoding pooled(2 * half, 0.0);
    for (const auto& c : coords) {
        for (std::size_t j = 0; j < half; ++j) {
            const double arg =
                kTwoPi * (basis.freq(0, j) * c[0] + basis.freq(1, j) * c[1] + basis.freq(2, j) * c[2]);
            pooled[j] += std::sin(arg);
            pooled[half + j] += std::cos(arg);
        }
    }
    const double inv = 1.0 / static_cast<double>(coords.size());
    for (auto& v : pooled) v *= inv;
    return pooled;
}

inline void lfpe_accumulate_basis_grad(const FourierBasis& basis, std::span<const Vec3> coords,
                                       const double* grad_feature, Matrix& grad_basis) {
    const std::size_t half = basis.freq.cols;
    const double inv = kTwoPi / static_cast<double>(coords.size());
    for (const auto& c : coords) {
        for (std::size_t j = 0; j < half; ++j) {
            const double arg =
                kTwoPi * (basis.freq(0, j) * c[0] + basis.freq(1, j) * c[1] + basis.freq(2, j) * c[2]);
            // d sin/dW = 2*pi*p*cos, d cos/dW = -2*pi*p*sin
            const double g = grad_feature[j] * std::cos(arg) - grad_feature[half + j] * std::sin(arg);
            const double gs = g * inv;
            grad_basis(0, j) += gs * c[0];
            grad_basis(1, j) += gs * c[1];
            grad_basis(2, j) += gs * c[2];
        }
    }
}

}  // namespace detail

// Trains the regressor on standardized targets with Adam, returning the
// best-validation checkpoint plus the per-epoch loss history. Trainable
// encoder parameters (LFPE basis, Learnable table) receive gradients
// through the mean pooling; runs are bit-reproducible for a fixed config.
inline TrainResult train(std::span<const ShapeSample> train_samples,
                         std::span<const ShapeSample> val_samples, const TrainConfig& cfg) {
    cfg.validate();
    if (train_samples.empty() || val_samples.empty())
        throw std::invalid_argument("train: empty split");

    // Learnable tables need the (common) degraded grid geometry.
    GridContext grid_ctx;
    if (cfg.encoder.family == EncoderFamily::Learnable) {
        const auto& s0 = train_samples.front().shape;
        grid_ctx.dims = {s0.dims[0], s0.dims[1], s0.dims[2]};
        grid_ctx.spacing = {s0.spacing[0], s0.spacing[1], s0.spacing[2]};
    }
    Encoder encoder(cfg.encoder, 3, grid_ctx);
    const int dims = encoder.dims();

    auto gather = [&](std::span<const ShapeSample> samples) {
        std::vector<detail::SampleFeatures> fs(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].shape.occupied_count() == 0)
                throw std::invalid_argument("train: sample with empty occupancy");
            switch (cfg.encoder.family) {
                case EncoderFamily::Lfpe:
                    fs[i].coords = samples[i].coords();
                    break;
                case EncoderFamily::Learnable:
                    fs[i].table_indices = samples[i].shape.occupied_indices();
                    break;
                default:
                    fs[i].fixed = encode_shape(samples[i], encoder);
            }
        }
        return fs;
    };
    const auto train_feats = gather(train_samples);
    const auto val_feats = gather(val_samples);

    // target standardization on the train split
    const Matrix train_targets_raw = detail::targets_of(train_samples);
    const Matrix val_targets_raw = detail::targets_of(val_samples);
    TrainResult result;
    for (int t = 0; t < kOutputDims; ++t) {
        double mean = 0.0;
        for (std::size_t i = 0; i < train_targets_raw.rows; ++i) mean += train_targets_raw(i, t);
        mean /= static_cast<double>(train_targets_raw.rows);
        double var = 0.0;
        for (std::size_t i = 0; i < train_targets_raw.rows; ++i) {
            const double d = train_targets_raw(i, t) - mean;
            var += d * d;
        }
        var /= static_cast<double>(train_targets_raw.rows);
        result.target_mean[t] = mean;
        result.target_std[t] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    auto standardize = [&](const Matrix& raw) {
        Matrix out = raw;
        for (std::size_t i = 0; i < out.rows; ++i)
            for (int t = 0; t < kOutputDims; ++t)
                out(i, t) = (out(i, t) - result.target_mean[t]) / result.target_std[t];
        return out;
    };
    const Matrix train_targets = standardize(train_targets_raw);
    const Matrix val_targets = standardize(val_targets_raw);

    MlpParams params = MlpParams::init(dims, cfg.hidden, RngStream{cfg.seed, 0}.fork(0xB00).seed);
    Adam adam(AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
    AdamSlot s_w1, s_b1, s_w2, s_b2, s_w3, s_b3, s_enc;

    const std::size_t n_train = train_samples.size();
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    RngStream root{cfg.seed, 0};

    auto features_of = [&](const detail::SampleFeatures& f) -> Encoding {
        switch (cfg.encoder.family) {
            case EncoderFamily::Lfpe:
                return detail::lfpe_pooled(encoder.basis(), f.coords);
            case EncoderFamily::Learnable: {
                Encoding pooled(static_cast<std::size_t>(dims), 0.0);
                const auto& entries = encoder.table().entries;
                for (auto idx : f.table_indices) {
                    const double* row = entries.data.data() + idx * entries.cols;
                    for (int i = 0; i < dims; ++i) pooled[static_cast<std::size_t>(i)] += row[i];
                }
                const double inv = 1.0 / static_cast<double>(f.table_indices.size());
                for (auto& v : pooled) v *= inv;
                return pooled;
            }
            default:
                return f.fixed;
        }
    };

    auto eval_mse = [&](const std::vector<detail::SampleFeatures>& fs, const Matrix& targets) {
        Matrix x(fs.size(), static_cast<std::size_t>(dims));
        for (std::size_t i = 0; i < fs.size(); ++i) {
            const Encoding e = features_of(fs[i]);
            std::copy(e.begin(), e.end(), x.data.begin() + i * x.cols);
        }
        const ForwardCache c = forward(params, x);
        double acc = 0.0;
        for (std::size_t i = 0; i < c.pred.data.size(); ++i) {
            const double d = c.pred.data[i] - targets.data[i];
            acc += d * d;
        }
        return acc / static_cast<double>(c.pred.data.size());
    };

    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

    MlpParams best_params = params;
    Encoder best_encoder = encoder;
    result.mlp_parameters = params.parameter_count();
    result.encoder_parameters = encoder.trainable_parameter_count();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        RngStream shuffle = root.fork(0xE90C + static_cast<std::uint64_t>(epoch));
        for (std::size_t i = n_train - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(shuffle.uniform_index(i + 1));
            std::swap(order[i], order[j]);
        }

        double epoch_sq = 0.0;
        std::size_t epoch_terms = 0;
        for (std::size_t start = 0; start < n_train; start += batch) {
            const std::size_t b = std::min(batch, n_train - start);
            Matrix x(b, static_cast<std::size_t>(dims));
            Matrix y(b, kOutputDims);
            for (std::size_t r = 0; r < b; ++r) {
                const std::size_t s = order[start + r];
                const Encoding e = features_of(train_feats[s]);
                std::copy(e.begin(), e.end(), x.data.begin() + r * x.cols);
                y(r, 0) = train_targets(s, 0);
                y(r, 1) = train_targets(s, 1);
            }
            const ForwardCache cache = forward(params, x);
            Matrix grad_out(b, kOutputDims);
            const double inv = 1.0 / static_cast<double>(b * kOutputDims);
            for (std::size_t i = 0; i < grad_out.data.size(); ++i) {
                const double d = cache.pred.data[i] - y.data[i];
                grad_out.data[i] = 2.0 * d * inv;
                epoch_sq += d * d;
            }
            epoch_terms += grad_out.data.size();

            MlpGrads g = backward(params, cache, grad_out);

            adam.begin_step();
            adam.update(params.w1.data, g.w1.data, s_w1);
            adam.update(params.b1, g.b1, s_b1);
            adam.update(params.w2.data, g.w2.data, s_w2);
            adam.update(params.b2, g.b2, s_b2);
            adam.update(params.w3.data, g.w3.data, s_w3);
            adam.update(params.b3, g.b3, s_b3);

            if (cfg.encoder.family == EncoderFamily::Lfpe) {
                Matrix grad_basis(encoder.basis().freq.rows, encoder.basis().freq.cols);
                for (std::size_t r = 0; r < b; ++r) {
                    const std::size_t s = order[start + r];
                    detail::lfpe_accumulate_basis_grad(encoder.basis(), train_feats[s].coords,
                                                       g.x.data.data() + r * g.x.cols, grad_basis);
                }
                adam.update(encoder.basis().freq.data, grad_basis.data, s_enc);
            } else if (cfg.encoder.family == EncoderFamily::Learnable) {
                Matrix grad_table(encoder.table().entries.rows, encoder.table().entries.cols);
                for (std::size_t r = 0; r < b; ++r) {
                    const std::size_t s = order[start + r];
                    const auto& idxs = train_feats[s].table_indices;
                    const double inv_n = 1.0 / static_cast<double>(idxs.size());
                    const double* gx = g.x.data.data() + r * g.x.cols;
                    for (auto idx : idxs) {
                        double* row = grad_table.data.data() + idx * grad_table.cols;
                        for (int i = 0; i < dims; ++i) row[i] += gx[i] * inv_n;
                    }
                }
                adam.update(encoder.table().entries.data, grad_table.data, s_enc);
            }
        }

        const double train_mse = epoch_sq / static_cast<double>(epoch_terms);
        const double val_mse = eval_mse(val_feats, val_targets);
        if (!std::isfinite(train_mse) || !std::isfinite(val_mse))
            throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                     " (train_mse=" + std::to_string(train_mse) +
                                     ", val_mse=" + std::to_string(val_mse) + ")");
        result.history.push_back(TrainHistoryRow{epoch, train_mse, val_mse});
        if (val_mse < result.best_val_mse) {
            result.best_val_mse = val_mse;
            result.best_epoch = epoch;
            best_params = params;
            if (encoder.trainable()) best_encoder = encoder;
        }
    }

    result.params = std::move(best_params);
    result.encoder.emplace(std::move(best_encoder));
    return result;
}

// Predictions in raw target units.
inline Matrix predict(const TrainResult& result, std::span<const ShapeSample> samples) {
    const Encoder& enc = *result.encoder;
    Matrix x(samples.size(), static_cast<std::size_t>(enc.dims()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Encoding e = encode_shape(samples[i], enc);
        std::copy(e.begin(), e.end(), x.data.begin() + i * x.cols);
    }
    ForwardCache c = forward(result.params, x);
    for (std::size_t i = 0; i < c.pred.rows; ++i)
        for (int t = 0; t < kOutputDims; ++t)
            c.pred(i, t) = c.pred(i, t) * result.target_std[t] + result.target_mean[t];
    return c.pred;
}

// R^2 per target (min_fd, max_fd) on raw units.
inline std::array<double, 2> predict_r2(const TrainResult& result,
                                        std::span<const ShapeSample> samples) {
    const Matrix pred = predict(result, samples);
    std::array<double, 2> r2{0.0, 0.0};
    std::vector<double> p(samples.size()), t(samples.size());
    for (int k = 0; k < kOutputDims; ++k) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            p[i] = pred(i, k);
            t[i] = k == 0 ? samples[i].target.min_fd : samples[i].target.max_fd;
        }
        double mean = 0.0;
        for (double v : t) mean += v;
        mean /= static_cast<double>(t.size());
        double ss_res = 0.0, ss_tot = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            ss_res += (t[i] - p[i]) * (t[i] - p[i]);
            ss_tot += (t[i] - mean) * (t[i] - mean);
        }
        r2[static_cast<std::size_t>(k)] = 1.0 - ss_res / ss_tot;
    }
    return r2;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline void write_history_csv(const std::vector<TrainHistoryRow>& history,
                              const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_history_csv: cannot open " + path);
    f << "epoch,train_mse,val_mse\n";
    char buf[96];
    for (const auto& row : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", row.epoch, row.train_mse, row.val_mse);
        f << buf;
    }
}

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'A', 'F', 'E', 'A', 'T', 'M', 'L', 'P'};

inline void write_tensor(std::ofstream& f, const std::string& name, std::size_t rows,
                         std::size_t cols, std::span<const double> data) {
    const auto name_len = static_cast<std::uint32_t>(name.size());
    write_raw(f, name_len);
    f.write(name.data(), name_len);
    write_raw(f, static_cast<std::uint64_t>(rows));
    write_raw(f, static_cast<std::uint64_t>(cols));
    f.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
}

struct NamedTensor {
    std::string name;
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;
};

inline NamedTensor read_tensor(std::ifstream& f) {
    NamedTensor t;
    std::uint32_t name_len = 0;
    read_raw(f, name_len);
    t.name.resize(name_len);
    f.read(t.name.data(), name_len);
    std::uint64_t rows = 0, cols = 0;
    read_raw(f, rows);
    read_raw(f, cols);
    t.rows = rows;
    t.cols = cols;
    t.data.resize(rows * cols);
    f.read(reinterpret_cast<char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!f) throw std::runtime_error("read_tensor: truncated checkpoint");
    return t;
}

}  // namespace detail

// Little-endian checkpoint: magic, u32 version, u32 tensor count, then per
// tensor {u32 name_len, name, u64 rows, u64 cols, f64 payload}. Always holds
// the six MLP tensors and target stats; trainable encoder state is appended
// when present.
inline void save_checkpoint(const TrainResult& result, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    f.write(detail::kCheckpointMagic, 8);
    detail::write_raw(f, std::uint32_t{1});
    const bool has_basis = result.encoder && result.encoder->family() == EncoderFamily::Lfpe;
    const bool has_table = result.encoder && result.encoder->family() == EncoderFamily::Learnable;
    detail::write_raw(f, static_cast<std::uint32_t>(7 + (has_basis || has_table ? 1 : 0)));

    const MlpParams& p = result.params;
    detail::write_tensor(f, "w1", p.w1.rows, p.w1.cols, p.w1.data);
    detail::write_tensor(f, "b1", 1, p.b1.size(), p.b1);
    detail::write_tensor(f, "w2", p.w2.rows, p.w2.cols, p.w2.data);
    detail::write_tensor(f, "b2", 1, p.b2.size(), p.b2);
    detail::write_tensor(f, "w3", p.w3.rows, p.w3.cols, p.w3.data);
    detail::write_tensor(f, "b3", 1, p.b3.size(), p.b3);
    const double stats[4] = {result.target_mean[0], result.target_mean[1], result.target_std[0],
                             result.target_std[1]};
    detail::write_tensor(f, "target_stats", 2, 2, std::span<const double>(stats, 4));
    if (has_basis) {
        const auto& b = result.encoder->basis().freq;
        detail::write_tensor(f, "lfpe_basis", b.rows, b.cols, b.data);
    } else if (has_table) {
        const auto& t = result.encoder->table().entries;
        detail::write_tensor(f, "learnable_table", t.rows, t.cols, t.data);
    }
    if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

// Reads back the tensors of a checkpoint, keyed by name.
inline std::vector<detail::NamedTensor> load_checkpoint_tensors(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    std::uint32_t version = 0, count = 0;
    detail::read_raw(f, version);
    if (version != 1) throw std::runtime_error("load_checkpoint: unsupported version");
    detail::read_raw(f, count);
    std::vector<detail::NamedTensor> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) tensors.push_back(detail::read_tensor(f));
    return tensors;
}

}  // namespace anisofeat
