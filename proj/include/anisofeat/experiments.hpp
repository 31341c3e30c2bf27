#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "anisofeat/dataset_io.hpp"
#include "anisofeat/encoder.hpp"
#include "anisofeat/mlp.hpp"
#include "anisofeat/parallel.hpp"
#include "anisofeat/similarity.hpp"
#include "anisofeat/stats.hpp"

namespace anisofeat {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Config plumbing: strict schemas, manifests
// ---------------------------------------------------------------------------

namespace cfgio {

inline void check_keys(const json& obj, const std::string& ctx,
                       std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw std::runtime_error("config: expected an object at " + ctx);
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw std::runtime_error("config: unknown key '" + key + "' in " + ctx);
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::runtime_error(std::string("config: bad value type for '") + key + "'");
    }
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace cfgio

// Every command drops a manifest into its run directory: the resolved
// config, its hash, and the software version. Nothing volatile, so reruns
// are byte-identical.
inline void write_manifest(const std::string& dir, const std::string& command,
                           const json& resolved_config) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    json manifest;
    manifest["command"] = command;
    manifest["version"] = kVersion;
    manifest["config"] = resolved_config;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(cfgio::fnv1a(resolved_config.dump())));
    manifest["config_hash"] = hash;
    std::ofstream f(fs::path(dir) / "manifest.json");
    if (!f) throw std::runtime_error("write_manifest: cannot write in " + dir);
    f << manifest.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Encoder spec <-> json
// ---------------------------------------------------------------------------

inline json encoder_spec_to_json(const EncoderSpec& spec) {
    json j;
    j["family"] = encoder_family_name(spec.family);
    j["dims"] = spec.dims;
    j["temperature"] = spec.temperature;
    j["scale"] = spec.scale;
    j["scales"] = spec.scales;
    j["seed"] = spec.seed;
    return j;
}

// ---------------------------------------------------------------------------
// simmap
// ---------------------------------------------------------------------------

struct SimmapConfig {
    std::vector<int> grid{14, 14};
    EncoderSpec encoder;   // dims defaults to 512 for map rendering
    std::string out = "simmap_out";

    SimmapConfig() { encoder.dims = 512; }
};

struct SimmapResult {
    SimilarityMap map;   // raw values
    std::vector<std::string> files;
};

inline SimmapResult run_simmap(const SimmapConfig& cfg) {
    namespace fs = std::filesystem;
    const GridSpec grid(cfg.grid);
    const int m = static_cast<int>(grid.rank());
    GridContext ctx;
    if (cfg.encoder.family == EncoderFamily::Learnable) {
        ctx.dims = cfg.grid;
        ctx.spacing.assign(grid.rank(), 1.0);
    }
    const Encoder encoder(cfg.encoder, m, ctx);
    SimmapResult result;
    result.map = compute_map([&](const Position& p) { return encoder.encode(p); }, grid);

    fs::create_directories(cfg.out);
    const auto pgm_files =
        write_pgm(minmax_normalized(result.map), (fs::path(cfg.out) / "map.pgm").string());
    const std::string csv = (fs::path(cfg.out) / "map.csv").string();
    write_csv(result.map, csv);
    result.files = pgm_files;
    result.files.push_back(csv);

    json jcfg;
    jcfg["grid"] = cfg.grid;
    jcfg["encoder"] = encoder_spec_to_json(cfg.encoder);
    jcfg["out"] = cfg.out;
    write_manifest(cfg.out, "simmap", jcfg);
    result.files.push_back((fs::path(cfg.out) / "manifest.json").string());
    return result;
}

// ---------------------------------------------------------------------------
// kernel-check
// ---------------------------------------------------------------------------

struct KernelCheckConfig {
    int dims = 16384;                              // D; D/2 Monte Carlo features
    std::vector<double> iso_scales{0.5, 1.0};
    std::vector<double> aniso_scales{0.497, 1.125};
    // Gentle scales for the directional-decay comparison: both kernels must
    // stay clearly above the Monte Carlo noise floor out to max_offset.
    std::vector<double> elong_scales{0.08, 0.2};
    std::vector<int> grid{14, 14};
    int max_offset = 5;
    int elong_replicates = 16;
    int elong_dims = 8192;
    std::uint64_t seed = 42;
    std::string out;   // optional report directory
};

struct KernelCheckResult {
    double max_abs_deviation = 0.0;
    double tolerance = 0.0;
    bool kernel_ok = true;
    bool elongation_ok = true;
    std::vector<std::string> lines;

    bool ok() const { return kernel_ok && elongation_ok; }
};

namespace detail {

// Normalized similarities dot(enc(ref), enc(ref+offset))/(D/2) for every
// in-bounds offset with Chebyshev norm <= max_offset.
inline std::map<std::array<int, 2>, double> normalized_window(const FourierBasis& basis,
                                                              const GridSpec& grid,
                                                              int max_offset) {
    const double half = static_cast<double>(basis.freq.cols);
    const Encoding ref = fourier_encode(grid.reference, basis);
    std::map<std::array<int, 2>, double> out;
    for (int di = -max_offset; di <= max_offset; ++di)
        for (int dj = -max_offset; dj <= max_offset; ++dj) {
            const double i = grid.reference[0] + di;
            const double j = grid.reference[1] + dj;
            if (i < 0 || j < 0 || i >= grid.shape[0] || j >= grid.shape[1]) continue;
            const Encoding e = fourier_encode(Position{i, j}, basis);
            out[{di, dj}] = dot(ref, e) / half;
        }
    return out;
}

}  // namespace detail

// Monte Carlo verification that sampled Fourier encodings reproduce their
// analytic Gaussian kernels, plus the directional-decay comparison for
// anisotropic scales.
inline KernelCheckResult run_kernel_check(const KernelCheckConfig& cfg) {
    if (cfg.dims < 2 || cfg.dims % 2 != 0)
        throw std::invalid_argument("kernel-check: dims must be positive and even");
    for (double s : cfg.iso_scales)
        if (!(s > 0.0)) throw std::invalid_argument("kernel-check: scales must be > 0");
    if (cfg.elong_scales.size() != 2 || !(cfg.elong_scales[0] < cfg.elong_scales[1]))
        throw std::invalid_argument("kernel-check: elong scales must satisfy s_row < s_col");
    if (cfg.grid.size() != 2) throw std::invalid_argument("kernel-check: grid must be 2D");

    KernelCheckResult result;
    const double half = cfg.dims / 2;
    result.tolerance = 4.0 / std::sqrt(half);
    const GridSpec grid(cfg.grid);
    char line[160];

    auto check_window = [&](const FourierBasis& basis, const std::vector<double>& scales,
                            const std::string& label) {
        const auto window = detail::normalized_window(basis, grid, cfg.max_offset);
        double worst = 0.0;
        for (const auto& [offset, got] : window) {
            double expo = 0.0;
            for (int i = 0; i < 2; ++i)
                expo += scales[static_cast<std::size_t>(i)] * scales[static_cast<std::size_t>(i)] *
                        offset[static_cast<std::size_t>(i)] * offset[static_cast<std::size_t>(i)];
            const double want = std::exp(-2.0 * kTwoPi * kTwoPi / 4.0 * expo);
            worst = std::max(worst, std::fabs(got - want));
        }
        result.max_abs_deviation = std::max(result.max_abs_deviation, worst);
        const bool ok = worst <= result.tolerance;
        result.kernel_ok = result.kernel_ok && ok;
        std::snprintf(line, sizeof(line), "%s %s: max |mc - kernel| = %.6f (tol %.6f)",
                      ok ? "PASS" : "FAIL", label.c_str(), worst, result.tolerance);
        result.lines.push_back(line);
    };

    EncodingConfig ecfg;
    ecfg.dims = cfg.dims;
    ecfg.spatial_dims = 2;
    ecfg.seed = cfg.seed;
    for (double s : cfg.iso_scales)
        check_window(sample_basis_isotropic(s, ecfg), {s, s}, "ifpe s=" + std::to_string(s));
    if (cfg.aniso_scales.size() == 2)
        check_window(sample_basis_anisotropic(ScaleVector(cfg.aniso_scales), ecfg),
                     cfg.aniso_scales,
                     "afpe s=(" + std::to_string(cfg.aniso_scales[0]) + "," +
                         std::to_string(cfg.aniso_scales[1]) + ")");

    // degenerate anisotropy: equal scales must reproduce the isotropic
    // sampler bit for bit under a shared seed
    {
        EncodingConfig scfg;
        scfg.dims = 64;
        scfg.spatial_dims = 2;
        scfg.seed = cfg.seed;
        const double s0 = cfg.iso_scales.front();
        const auto iso = sample_basis_isotropic(s0, scfg);
        const auto aniso = sample_basis_anisotropic(ScaleVector::uniform(2, s0), scfg);
        const bool identical = iso.freq.data == aniso.freq.data;
        result.kernel_ok = result.kernel_ok && identical;
        std::snprintf(line, sizeof(line),
                      "%s equal-scale sampling: anisotropic path matches isotropic bitwise",
                      identical ? "PASS" : "FAIL");
        result.lines.push_back(line);
    }

    // directional elongation, averaged over replicate bases
    {
        EncodingConfig rcfg;
        rcfg.dims = cfg.elong_dims;
        rcfg.spatial_dims = 2;
        const double rhalf = cfg.elong_dims / 2;
        std::vector<double> row(static_cast<std::size_t>(cfg.max_offset), 0.0);
        std::vector<double> col(static_cast<std::size_t>(cfg.max_offset), 0.0);
        for (int rep = 0; rep < cfg.elong_replicates; ++rep) {
            rcfg.seed = cfg.seed + static_cast<std::uint64_t>(rep);
            const auto basis = sample_basis_anisotropic(ScaleVector(cfg.elong_scales), rcfg);
            const Encoding ref = fourier_encode(grid.reference, basis);
            for (int k = 1; k <= cfg.max_offset; ++k) {
                row[static_cast<std::size_t>(k - 1)] +=
                    dot(ref, fourier_encode(Position{grid.reference[0] + k, grid.reference[1]}, basis)) / rhalf;
                col[static_cast<std::size_t>(k - 1)] +=
                    dot(ref, fourier_encode(Position{grid.reference[0], grid.reference[1] + k}, basis)) / rhalf;
            }
        }
        bool ok = true;
        for (int k = 1; k <= cfg.max_offset; ++k)
            if (!(row[static_cast<std::size_t>(k - 1)] > col[static_cast<std::size_t>(k - 1)]))
                ok = false;
        result.elongation_ok = ok;
        std::snprintf(line, sizeof(line),
                      "%s elongation s=(%.3f,%.3f): slower decay along the smaller-scale axis "
                      "for offsets 1..%d",
                      ok ? "PASS" : "FAIL", cfg.elong_scales[0], cfg.elong_scales[1],
                      cfg.max_offset);
        result.lines.push_back(line);
    }

    if (!cfg.out.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(cfg.out);
        std::ofstream f(fs::path(cfg.out) / "kernel_check.txt");
        for (const auto& l : result.lines) f << l << "\n";
        std::snprintf(line, sizeof(line), "max deviation %.6f", result.max_abs_deviation);
        f << line << "\n" << (result.ok() ? "ALL PASS" : "FAILED") << "\n";

        json jcfg;
        jcfg["dims"] = cfg.dims;
        jcfg["iso_scales"] = cfg.iso_scales;
        jcfg["aniso_scales"] = cfg.aniso_scales;
        jcfg["elong_scales"] = cfg.elong_scales;
        jcfg["grid"] = cfg.grid;
        jcfg["max_offset"] = cfg.max_offset;
        jcfg["elong_replicates"] = cfg.elong_replicates;
        jcfg["elong_dims"] = cfg.elong_dims;
        jcfg["seed"] = cfg.seed;
        jcfg["out"] = cfg.out;
        write_manifest(cfg.out, "kernel-check", jcfg);
    }
    return result;
}

// ---------------------------------------------------------------------------
// feret-bench
// ---------------------------------------------------------------------------

struct FeretBenchConfig {
    std::uint64_t seed = 42;
    int jobs = 0;   // 0: resolve from env / hardware
    std::string out = "bench_out";
    DatasetConfig dataset;   // anisotropy_factor ignored; factors below apply
    std::vector<int> anisotropy_factors{3, 5};
    std::vector<EncoderFamily> encoders{EncoderFamily::Spe,       EncoderFamily::Ifpe,
                                        EncoderFamily::Afpe,      EncoderFamily::Lfpe,
                                        EncoderFamily::Learnable, EncoderFamily::None};
    int encoding_dims = 132;   // divisible by 2*m for the sinusoidal family
    double spe_temperature = kDefaultSpeTemperature;
    double ifpe_scale = kDefaultIsotropicScale;
    int epochs = 100;
    int batch_size = 64;
    double learning_rate = 1e-3;
    int hidden = 256;
    int n_boot = 100;
    double alpha = kDefaultAlpha;
    bool save_datasets = false;

    FeretBenchConfig() {
        // shapes sized to roughly unit extent so the s = 1.0 Fourier
        // default operates in its informative band
        dataset.grid = {40, 40, 40};
        dataset.spacing_mm = 0.03125;
    }
};

struct BenchRun {
    int factor = 0;
    EncoderFamily family = EncoderFamily::None;
    MetricSummary r2_min, r2_max;
    std::array<double, 2> test_r2{0.0, 0.0};   // full-sample values
    double best_val_mse = 0.0;
    std::size_t mlp_parameters = 0;
    std::size_t encoder_parameters = 0;
};

struct FeretBenchResult {
    std::vector<BenchRun> runs;
    // ranked names per (factor, metric) with flags, in report order
    std::map<std::pair<int, std::string>, std::vector<RankedEntry>> rankings;
    std::vector<std::string> files;
};

inline json feret_bench_config_to_json(const FeretBenchConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["jobs"] = cfg.jobs;
    j["out"] = cfg.out;
    j["dataset"] = {{"n", cfg.dataset.n},
                    {"grid", cfg.dataset.grid},
                    {"spacing_mm", cfg.dataset.spacing_mm},
                    {"anisotropy_factors", cfg.anisotropy_factors},
                    {"axis", cfg.dataset.anisotropy_axis},
                    {"split", cfg.dataset.split},
                    {"feret_directions", cfg.dataset.feret_directions},
                    {"blob_smoothness", cfg.dataset.blob_smoothness}};
    std::vector<std::string> enc_names;
    for (auto f : cfg.encoders) enc_names.push_back(encoder_family_name(f));
    j["encoders"] = enc_names;
    j["encoding"] = {{"dims", cfg.encoding_dims},
                     {"spe_temperature", cfg.spe_temperature},
                     {"ifpe_scale", cfg.ifpe_scale}};
    j["train"] = {{"epochs", cfg.epochs},
                  {"batch_size", cfg.batch_size},
                  {"learning_rate", cfg.learning_rate},
                  {"hidden", cfg.hidden}};
    j["eval"] = {{"n_boot", cfg.n_boot}, {"alpha", cfg.alpha}};
    j["save_datasets"] = cfg.save_datasets;
    return j;
}

inline FeretBenchConfig feret_bench_config_from_json(const json& j) {
    cfgio::check_keys(j, "<root>",
                      {"seed", "jobs", "out", "dataset", "encoders", "encoding", "train", "eval",
                       "save_datasets"});
    FeretBenchConfig cfg;
    cfg.seed = cfgio::get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.jobs = cfgio::get_or<int>(j, "jobs", cfg.jobs);
    cfg.out = cfgio::get_or<std::string>(j, "out", cfg.out);
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        cfgio::check_keys(d, "dataset",
                          {"n", "grid", "spacing_mm", "anisotropy_factors", "axis", "split",
                           "feret_directions", "blob_smoothness"});
        cfg.dataset.n = cfgio::get_or<int>(d, "n", cfg.dataset.n);
        cfg.dataset.grid = cfgio::get_or<std::array<int, 3>>(d, "grid", cfg.dataset.grid);
        cfg.dataset.spacing_mm = cfgio::get_or<double>(d, "spacing_mm", cfg.dataset.spacing_mm);
        cfg.anisotropy_factors =
            cfgio::get_or<std::vector<int>>(d, "anisotropy_factors", cfg.anisotropy_factors);
        cfg.dataset.anisotropy_axis = cfgio::get_or<int>(d, "axis", cfg.dataset.anisotropy_axis);
        cfg.dataset.split = cfgio::get_or<std::array<double, 3>>(d, "split", cfg.dataset.split);
        cfg.dataset.feret_directions =
            cfgio::get_or<int>(d, "feret_directions", cfg.dataset.feret_directions);
        cfg.dataset.blob_smoothness =
            cfgio::get_or<double>(d, "blob_smoothness", cfg.dataset.blob_smoothness);
    }
    if (j.contains("encoders")) {
        cfg.encoders.clear();
        for (const auto& name : j.at("encoders"))
            cfg.encoders.push_back(parse_encoder_family(name.get<std::string>()));
        if (cfg.encoders.empty()) throw std::runtime_error("config: encoders list is empty");
    }
    if (j.contains("encoding")) {
        const auto& e = j.at("encoding");
        cfgio::check_keys(e, "encoding", {"dims", "spe_temperature", "ifpe_scale"});
        cfg.encoding_dims = cfgio::get_or<int>(e, "dims", cfg.encoding_dims);
        cfg.spe_temperature = cfgio::get_or<double>(e, "spe_temperature", cfg.spe_temperature);
        cfg.ifpe_scale = cfgio::get_or<double>(e, "ifpe_scale", cfg.ifpe_scale);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        cfgio::check_keys(t, "train", {"epochs", "batch_size", "learning_rate", "hidden"});
        cfg.epochs = cfgio::get_or<int>(t, "epochs", cfg.epochs);
        cfg.batch_size = cfgio::get_or<int>(t, "batch_size", cfg.batch_size);
        cfg.learning_rate = cfgio::get_or<double>(t, "learning_rate", cfg.learning_rate);
        cfg.hidden = cfgio::get_or<int>(t, "hidden", cfg.hidden);
    }
    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        cfgio::check_keys(e, "eval", {"n_boot", "alpha"});
        cfg.n_boot = cfgio::get_or<int>(e, "n_boot", cfg.n_boot);
        cfg.alpha = cfgio::get_or<double>(e, "alpha", cfg.alpha);
    }
    cfg.save_datasets = cfgio::get_or<bool>(j, "save_datasets", cfg.save_datasets);
    return cfg;
}

namespace detail {

inline EncoderSpec bench_encoder_spec(const FeretBenchConfig& cfg, EncoderFamily family,
                                      int factor) {
    EncoderSpec spec;
    spec.family = family;
    spec.dims = cfg.encoding_dims;
    spec.temperature = cfg.spe_temperature;
    spec.scale = cfg.ifpe_scale;
    spec.seed = cfg.seed;
    if (family == EncoderFamily::Afpe) {
        std::vector<double> anisotropy(3, 1.0);
        anisotropy[static_cast<std::size_t>(cfg.dataset.anisotropy_axis)] =
            static_cast<double>(factor);
        spec.scales = afpe_scale_from_anisotropy(anisotropy).values();
    }
    return spec;
}

inline std::pair<std::vector<double>, std::vector<double>> split_predictions(
    const Matrix& pred, std::span<const ShapeSample> samples, int target) {
    std::vector<double> p(samples.size()), t(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        p[i] = pred(i, static_cast<std::size_t>(target));
        t[i] = target == 0 ? samples[i].target.min_fd : samples[i].target.max_fd;
    }
    return {std::move(p), std::move(t)};
}

}  // namespace detail

// Trains every requested encoder family on every anisotropy factor,
// bootstraps test R^2 per target, ranks families, and writes the report
// files. The same base shapes underlie every factor; only the degradation
// differs.
inline FeretBenchResult run_feret_bench(const FeretBenchConfig& cfg) {
    namespace fs = std::filesystem;
    const int jobs = resolve_jobs(cfg.jobs);
    const RngStream root{cfg.seed, 0};

    // datasets, one per factor, sharing base shapes
    std::vector<Dataset> datasets(cfg.anisotropy_factors.size());
    for (std::size_t fi = 0; fi < cfg.anisotropy_factors.size(); ++fi) {
        DatasetConfig dcfg = cfg.dataset;
        dcfg.anisotropy_factor = cfg.anisotropy_factors[fi];
        datasets[fi] = build_dataset(root.fork(0xDA7A), dcfg, jobs);
    }

    const std::size_t n_runs = cfg.anisotropy_factors.size() * cfg.encoders.size();
    std::vector<BenchRun> runs(n_runs);
    std::vector<std::vector<TrainHistoryRow>> histories(n_runs);
    parallel_for(n_runs, jobs, [&](std::size_t run_idx) {
        const std::size_t fi = run_idx / cfg.encoders.size();
        const std::size_t ei = run_idx % cfg.encoders.size();
        const int factor = cfg.anisotropy_factors[fi];
        const EncoderFamily family = cfg.encoders[ei];
        const Dataset& ds = datasets[fi];

        TrainConfig tcfg;
        tcfg.epochs = cfg.epochs;
        tcfg.batch_size = cfg.batch_size;
        tcfg.learning_rate = cfg.learning_rate;
        tcfg.hidden = cfg.hidden;
        tcfg.seed = root.fork(0x7EA1 + run_idx).seed;
        tcfg.encoder = detail::bench_encoder_spec(cfg, family, factor);

        const TrainResult trained = train(ds.train, ds.val, tcfg);
        const Matrix pred = predict(trained, ds.test);

        BenchRun& run = runs[run_idx];
        run.factor = factor;
        run.family = family;
        run.best_val_mse = trained.best_val_mse;
        run.mlp_parameters = trained.mlp_parameters;
        run.encoder_parameters = trained.encoder_parameters;
        run.test_r2 = predict_r2(trained, ds.test);
        for (int target = 0; target < 2; ++target) {
            const auto [p, t] = detail::split_predictions(pred, ds.test, target);
            RngStream bstream = root.fork(0xB007 + run_idx * 2 + static_cast<std::size_t>(target));
            auto& slot = target == 0 ? run.r2_min : run.r2_max;
            slot = bootstrap_metric(p, t, r2_score, cfg.n_boot, bstream,
                                    target == 0 ? "r2_min_fd" : "r2_max_fd");
        }
        histories[run_idx] = trained.history;
    });

    FeretBenchResult result;
    result.runs = runs;

    fs::create_directories(cfg.out);
    if (cfg.save_datasets)
        for (std::size_t fi = 0; fi < datasets.size(); ++fi)
            save_dataset(datasets[fi],
                         (fs::path(cfg.out) /
                          ("dataset_f" + std::to_string(cfg.anisotropy_factors[fi])))
                             .string());

    // per-run history files
    for (std::size_t i = 0; i < n_runs; ++i) {
        const std::string name = "history_f" + std::to_string(runs[i].factor) + "_" +
                                 encoder_family_name(runs[i].family) + ".csv";
        write_history_csv(histories[i], (fs::path(cfg.out) / name).string());
        result.files.push_back(name);
    }

    // rankings per (factor, target)
    for (std::size_t fi = 0; fi < cfg.anisotropy_factors.size(); ++fi) {
        const int factor = cfg.anisotropy_factors[fi];
        for (const std::string metric : {"min_fd", "max_fd"}) {
            std::vector<std::pair<std::string, MetricSummary>> summaries;
            for (const auto& run : runs) {
                if (run.factor != factor) continue;
                summaries.emplace_back(encoder_family_name(run.family),
                                       metric == "min_fd" ? run.r2_min : run.r2_max);
            }
            result.rankings[{factor, metric}] = rank_encoders(summaries, cfg.alpha, true);
        }
    }

    // report.csv
    {
        std::ofstream f(fs::path(cfg.out) / "report.csv");
        f << "factor,encoder,metric,mean,std,n_boot,n_undefined,full_sample_r2,flag,p_vs_leader\n";
        char buf[256];
        for (const auto& [key, ranked] : result.rankings) {
            for (const auto& entry : ranked) {
                const char* flag = entry.flag == RankFlag::Best
                                       ? "best"
                                       : (entry.flag == RankFlag::TopTwo ? "top2" : "");
                double full = 0.0;
                for (const auto& run : runs)
                    if (run.factor == key.first && encoder_family_name(run.family) == entry.name)
                        full = key.second == "min_fd" ? run.test_r2[0] : run.test_r2[1];
                std::snprintf(buf, sizeof(buf), "%d,%s,r2_%s,%.6f,%.6f,%d,%d,%.6f,%s,%.6g\n",
                              key.first, entry.name.c_str(), key.second.c_str(),
                              entry.summary.mean, entry.summary.stddev, entry.summary.n_boot,
                              entry.summary.n_undefined, full, flag, entry.p_vs_leader);
                f << buf;
            }
        }
        result.files.push_back("report.csv");
    }

    // report.txt, one block per factor with both targets side by side
    {
        std::ofstream f(fs::path(cfg.out) / "report.txt");
        char buf[256];
        if (!runs.empty()) {
            std::snprintf(buf, sizeof(buf), "regressor parameters: %zu\n\n",
                          runs.front().mlp_parameters);
            f << buf;
        }
        for (std::size_t fi = 0; fi < cfg.anisotropy_factors.size(); ++fi) {
            const int factor = cfg.anisotropy_factors[fi];
            f << "anisotropy " << factor << " (R^2, mean +- std over " << cfg.n_boot
              << " bootstrap runs; * best with p < " << cfg.alpha << ", ~ top two)\n";
            for (const auto& run : runs)
                if (run.factor == factor && run.encoder_parameters > 0) {
                    std::snprintf(buf, sizeof(buf), "  %s trains %zu extra encoder parameters\n",
                                  encoder_family_name(run.family).c_str(),
                                  run.encoder_parameters);
                    f << buf;
                }
            std::snprintf(buf, sizeof(buf), "%-10s %-22s %-22s\n", "method", "min FD", "max FD");
            f << buf;
            for (EncoderFamily family : cfg.encoders) {
                const BenchRun* run = nullptr;
                for (const auto& r : runs)
                    if (r.factor == factor && r.family == family) run = &r;
                if (!run) continue;
                auto flag_of = [&](const std::string& metric) {
                    for (const auto& entry : result.rankings.at({factor, metric}))
                        if (entry.name == encoder_family_name(family))
                            return entry.flag == RankFlag::Best
                                       ? '*'
                                       : (entry.flag == RankFlag::TopTwo ? '~' : ' ');
                    return ' ';
                };
                char cell_min[48], cell_max[48];
                std::snprintf(cell_min, sizeof(cell_min), "%.3f +- %.3f%c", run->r2_min.mean,
                              run->r2_min.stddev, flag_of("min_fd"));
                std::snprintf(cell_max, sizeof(cell_max), "%.3f +- %.3f%c", run->r2_max.mean,
                              run->r2_max.stddev, flag_of("max_fd"));
                std::snprintf(buf, sizeof(buf), "%-10s %-22s %-22s\n",
                              encoder_family_name(family).c_str(), cell_min, cell_max);
                f << buf;
            }
            f << "\n";
        }
        result.files.push_back("report.txt");
    }

    write_manifest(cfg.out, "feret-bench", feret_bench_config_to_json(cfg));
    result.files.push_back("manifest.json");
    return result;
}

// ---------------------------------------------------------------------------
// scale-search
// ---------------------------------------------------------------------------

struct ScaleSearchConfig {
    std::uint64_t seed = 42;
    int jobs = 0;
    std::string out = "search_out";
    DatasetConfig dataset;   // anisotropy_factor used as-is (default 5)
    int n_trials = 50;
    std::array<double, 2> bounds{0.05, 5.0};
    int encoding_dims = 132;
    double baseline_scale = kDefaultIsotropicScale;
    int epochs = 100;   // trials and baseline run at 75% of this
    int batch_size = 64;
    double learning_rate = 1e-3;
    int hidden = 256;

    ScaleSearchConfig() {
        dataset.anisotropy_factor = 5;
        dataset.grid = {40, 40, 40};
        dataset.spacing_mm = 0.03125;
    }
};

struct ScaleTrial {
    int index = -1;               // -1 marks the isotropic baseline
    std::vector<double> scales;
    std::array<double, 2> val_r2{0.0, 0.0};
    double score = 0.0;           // mean of the two validation R^2
};

struct ScaleSearchResult {
    ScaleVector best_scales;
    double best_score = 0.0;
    ScaleTrial baseline;
    std::vector<ScaleTrial> trials;
    std::vector<std::string> files;
};

inline json scale_search_config_to_json(const ScaleSearchConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["jobs"] = cfg.jobs;
    j["out"] = cfg.out;
    j["dataset"] = {{"n", cfg.dataset.n},
                    {"grid", cfg.dataset.grid},
                    {"spacing_mm", cfg.dataset.spacing_mm},
                    {"anisotropy_factor", cfg.dataset.anisotropy_factor},
                    {"axis", cfg.dataset.anisotropy_axis},
                    {"split", cfg.dataset.split},
                    {"feret_directions", cfg.dataset.feret_directions},
                    {"blob_smoothness", cfg.dataset.blob_smoothness}};
    j["n_trials"] = cfg.n_trials;
    j["bounds"] = cfg.bounds;
    j["encoding"] = {{"dims", cfg.encoding_dims}};
    j["baseline_scale"] = cfg.baseline_scale;
    j["train"] = {{"epochs", cfg.epochs},
                  {"batch_size", cfg.batch_size},
                  {"learning_rate", cfg.learning_rate},
                  {"hidden", cfg.hidden}};
    return j;
}

inline ScaleSearchConfig scale_search_config_from_json(const json& j) {
    cfgio::check_keys(j, "<root>",
                      {"seed", "jobs", "out", "dataset", "n_trials", "bounds", "encoding",
                       "baseline_scale", "train"});
    ScaleSearchConfig cfg;
    cfg.seed = cfgio::get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.jobs = cfgio::get_or<int>(j, "jobs", cfg.jobs);
    cfg.out = cfgio::get_or<std::string>(j, "out", cfg.out);
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        cfgio::check_keys(d, "dataset",
                          {"n", "grid", "spacing_mm", "anisotropy_factor", "axis", "split",
                           "feret_directions", "blob_smoothness"});
        cfg.dataset.n = cfgio::get_or<int>(d, "n", cfg.dataset.n);
        cfg.dataset.grid = cfgio::get_or<std::array<int, 3>>(d, "grid", cfg.dataset.grid);
        cfg.dataset.spacing_mm = cfgio::get_or<double>(d, "spacing_mm", cfg.dataset.spacing_mm);
        cfg.dataset.anisotropy_factor =
            cfgio::get_or<int>(d, "anisotropy_factor", cfg.dataset.anisotropy_factor);
        cfg.dataset.anisotropy_axis = cfgio::get_or<int>(d, "axis", cfg.dataset.anisotropy_axis);
        cfg.dataset.split = cfgio::get_or<std::array<double, 3>>(d, "split", cfg.dataset.split);
        cfg.dataset.feret_directions =
            cfgio::get_or<int>(d, "feret_directions", cfg.dataset.feret_directions);
        cfg.dataset.blob_smoothness =
            cfgio::get_or<double>(d, "blob_smoothness", cfg.dataset.blob_smoothness);
    }
    cfg.n_trials = cfgio::get_or<int>(j, "n_trials", cfg.n_trials);
    cfg.bounds = cfgio::get_or<std::array<double, 2>>(j, "bounds", cfg.bounds);
    if (j.contains("encoding")) {
        cfgio::check_keys(j.at("encoding"), "encoding", {"dims"});
        cfg.encoding_dims = cfgio::get_or<int>(j.at("encoding"), "dims", cfg.encoding_dims);
    }
    cfg.baseline_scale = cfgio::get_or<double>(j, "baseline_scale", cfg.baseline_scale);
    if (j.contains("train")) {
        const auto& t = j.at("train");
        cfgio::check_keys(t, "train", {"epochs", "batch_size", "learning_rate", "hidden"});
        cfg.epochs = cfgio::get_or<int>(t, "epochs", cfg.epochs);
        cfg.batch_size = cfgio::get_or<int>(t, "batch_size", cfg.batch_size);
        cfg.learning_rate = cfgio::get_or<double>(t, "learning_rate", cfg.learning_rate);
        cfg.hidden = cfgio::get_or<int>(t, "hidden", cfg.hidden);
    }
    return cfg;
}

// Random search over per-dimension scales: n_trials log-uniform draws, each
// scored by validation R^2 (mean over both targets) after a shortened
// (75%-epoch) training run, against an isotropic baseline under the same
// shortened protocol.
inline ScaleSearchResult run_scale_search(const ScaleSearchConfig& cfg) {
    namespace fs = std::filesystem;
    if (cfg.n_trials < 1) throw std::invalid_argument("scale-search: n_trials must be >= 1");
    if (!(cfg.bounds[0] > 0.0) || !(cfg.bounds[1] >= cfg.bounds[0]))
        throw std::invalid_argument("scale-search: bad bounds");
    const int jobs = resolve_jobs(cfg.jobs);
    const RngStream root{cfg.seed, 0};

    const Dataset ds = build_dataset(root.fork(0xDA7A), cfg.dataset, jobs);
    const int trial_epochs = std::max(1, (3 * cfg.epochs) / 4);

    auto run_trial = [&](const EncoderSpec& spec, std::uint64_t train_seed) {
        TrainConfig tcfg;
        tcfg.epochs = trial_epochs;
        tcfg.batch_size = cfg.batch_size;
        tcfg.learning_rate = cfg.learning_rate;
        tcfg.hidden = cfg.hidden;
        tcfg.seed = train_seed;
        tcfg.encoder = spec;
        const TrainResult trained = train(ds.train, ds.val, tcfg);
        ScaleTrial trial;
        trial.val_r2 = predict_r2(trained, ds.val);
        trial.score = 0.5 * (trial.val_r2[0] + trial.val_r2[1]);
        return trial;
    };

    std::vector<ScaleTrial> trials(static_cast<std::size_t>(cfg.n_trials));
    parallel_for(static_cast<std::size_t>(cfg.n_trials), jobs, [&](std::size_t i) {
        RngStream draw = root.fork(0x5CA1E + i);
        const ScaleVector scales = random_scale_vector(draw, 3, cfg.bounds[0], cfg.bounds[1]);
        EncoderSpec spec;
        spec.family = EncoderFamily::Afpe;
        spec.dims = cfg.encoding_dims;
        spec.scales = scales.values();
        spec.seed = cfg.seed;
        ScaleTrial trial = run_trial(spec, root.fork(0x7EA1 + i).seed);
        trial.index = static_cast<int>(i);
        trial.scales = scales.values();
        trials[i] = trial;
    });

    EncoderSpec base_spec;
    base_spec.family = EncoderFamily::Ifpe;
    base_spec.dims = cfg.encoding_dims;
    base_spec.scale = cfg.baseline_scale;
    base_spec.seed = cfg.seed;
    ScaleTrial baseline = run_trial(base_spec, root.fork(0xBA5E).seed);
    baseline.scales = {cfg.baseline_scale, cfg.baseline_scale, cfg.baseline_scale};

    std::size_t best = 0;
    for (std::size_t i = 1; i < trials.size(); ++i)
        if (trials[i].score > trials[best].score) best = i;

    ScaleSearchResult result;
    result.trials = trials;
    result.baseline = baseline;
    result.best_scales = ScaleVector(trials[best].scales);
    result.best_score = trials[best].score;

    fs::create_directories(cfg.out);
    {
        std::ofstream f(fs::path(cfg.out) / "trials.csv");
        f << "trial,s0,s1,s2,val_r2_min,val_r2_max,score\n";
        char buf[224];
        auto row = [&](const ScaleTrial& t, const char* tag) {
            std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g,%.9g,%.6f,%.6f,%.6f\n", tag,
                          t.scales[0], t.scales[1], t.scales[2], t.val_r2[0], t.val_r2[1],
                          t.score);
            f << buf;
        };
        for (const auto& t : trials) row(t, std::to_string(t.index).c_str());
        row(baseline, "baseline_ifpe");
        result.files.push_back("trials.csv");
    }
    {
        json best_json;
        best_json["scales"] = result.best_scales.values();
        best_json["score"] = result.best_score;
        best_json["baseline_score"] = baseline.score;
        best_json["trial_index"] = trials[best].index;
        std::ofstream f(fs::path(cfg.out) / "best.json");
        f << best_json.dump(2) << "\n";
        result.files.push_back("best.json");
    }
    write_manifest(cfg.out, "scale-search", scale_search_config_to_json(cfg));
    result.files.push_back("manifest.json");
    return result;
}

}  // namespace anisofeat
