// anisofeat: positional-encoding experiments on grids and synthetic shapes.
//
// Subcommands:
//   simmap        dot-product similarity map of an encoder on a patch grid
//   kernel-check  Monte Carlo check of the Fourier-encoding kernel limits
//   feret-bench   encoder comparison on the synthetic Feret-diameter task
//   scale-search  random search over per-dimension AFPE scales

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anisofeat/experiments.hpp"

using namespace anisofeat;

namespace {

std::vector<int> parse_grid(const std::string& text) {
    std::vector<int> out;
    std::string token;
    for (char c : text + "x") {
        if (c == 'x' || c == 'X') {
            if (token.empty()) throw CLI::ValidationError("grid", "expected ROWSxCOLS[xDEPTH]");
            out.push_back(std::stoi(token));
            token.clear();
        } else {
            token.push_back(c);
        }
    }
    if (out.empty() || out.size() > 3)
        throw CLI::ValidationError("grid", "expected 1 to 3 extents");
    return out;
}

json load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    return json::parse(f);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anisofeat: positional-encoding laboratory"};
    app.require_subcommand(1);

    // ---- simmap ----
    auto* simmap = app.add_subcommand("simmap", "write similarity map PGM/CSV for an encoder");
    std::string sm_grid = "14x14";
    std::string sm_encoder = "ifpe";
    std::vector<double> sm_scales;
    double sm_t = kDefaultSpeTemperature;
    double sm_s = kDefaultIsotropicScale;
    int sm_dims = 512;
    std::uint64_t sm_seed = 42;
    std::string sm_out = "simmap_out";
    simmap->add_option("--grid", sm_grid, "grid extents, e.g. 14x14 or 8x14x14");
    simmap->add_option("--encoder", sm_encoder, "spe|ifpe|lfpe|afpe|learnable|none");
    simmap->add_option("--scales", sm_scales, "per-dimension scales for afpe")->delimiter(',');
    simmap->add_option("--t", sm_t, "sinusoidal temperature");
    simmap->add_option("--s", sm_s, "isotropic Fourier scale");
    simmap->add_option("--D,--dims", sm_dims, "encoding width");
    simmap->add_option("--seed", sm_seed, "random seed");
    simmap->add_option("--out", sm_out, "output directory");

    // ---- kernel-check ----
    auto* kcheck = app.add_subcommand("kernel-check",
                                      "Monte Carlo kernel-limit and elongation assertions");
    KernelCheckConfig kc;
    std::string kc_grid = "14x14";
    kcheck->add_option("--D,--dims", kc.dims, "encoding width (D/2 features)");
    kcheck->add_option("--s", kc.iso_scales, "isotropic scales to verify")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    kcheck->add_option("--scales", kc.aniso_scales, "anisotropic scale pair")->delimiter(',');
    kcheck->add_option("--elong-scales", kc.elong_scales, "scale pair for the decay comparison")
        ->delimiter(',');
    kcheck->add_option("--grid", kc_grid, "grid extents");
    kcheck->add_option("--max-offset", kc.max_offset, "largest offset checked");
    kcheck->add_option("--replicates", kc.elong_replicates, "bases averaged for elongation");
    kcheck->add_option("--seed", kc.seed, "random seed");
    kcheck->add_option("--out", kc.out, "optional report directory");

    // ---- feret-bench ----
    auto* bench = app.add_subcommand("feret-bench",
                                     "train and compare encoders on the Feret regression task");
    std::string fb_config;
    std::uint64_t fb_seed = 0;
    bool fb_seed_set = false;
    std::string fb_out;
    int fb_jobs = 0;
    bench->add_option("--config", fb_config, "JSON experiment config")->check(CLI::ExistingFile);
    bench->add_option("--seed", fb_seed, "override config seed")
        ->each([&](const std::string&) { fb_seed_set = true; });
    bench->add_option("--out", fb_out, "override output directory");
    bench->add_option("--jobs", fb_jobs, "parallel jobs (fallback: ANISOFEAT_JOBS, then cores)");

    // ---- scale-search ----
    auto* search = app.add_subcommand("scale-search",
                                      "random search over per-dimension Fourier scales");
    std::string ss_config;
    std::uint64_t ss_seed = 0;
    bool ss_seed_set = false;
    std::string ss_out;
    int ss_jobs = 0;
    int ss_trials = 0;
    search->add_option("--config", ss_config, "JSON experiment config")->check(CLI::ExistingFile);
    search->add_option("--seed", ss_seed, "override config seed")
        ->each([&](const std::string&) { ss_seed_set = true; });
    search->add_option("--out", ss_out, "override output directory");
    search->add_option("--jobs", ss_jobs, "parallel jobs");
    search->add_option("--n-trials", ss_trials, "override trial count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simmap->parsed()) {
            SimmapConfig cfg;
            cfg.grid = parse_grid(sm_grid);
            cfg.encoder.family = parse_encoder_family(sm_encoder);
            cfg.encoder.dims = sm_dims;
            cfg.encoder.temperature = sm_t;
            cfg.encoder.scale = sm_s;
            cfg.encoder.scales = sm_scales;
            cfg.encoder.seed = sm_seed;
            cfg.out = sm_out;
            const auto result = run_simmap(cfg);
            for (const auto& f : result.files) std::printf("wrote %s\n", f.c_str());
            return 0;
        }
        if (kcheck->parsed()) {
            kc.grid = parse_grid(kc_grid);
            const auto result = run_kernel_check(kc);
            for (const auto& line : result.lines) std::printf("%s\n", line.c_str());
            std::printf("max deviation %.6f (tolerance %.6f)\n", result.max_abs_deviation,
                        result.tolerance);
            std::printf("%s\n", result.ok() ? "ALL PASS" : "FAILED");
            return result.ok() ? 0 : 1;
        }
        if (bench->parsed()) {
            FeretBenchConfig cfg = fb_config.empty()
                                       ? FeretBenchConfig{}
                                       : feret_bench_config_from_json(load_config_file(fb_config));
            if (fb_seed_set) cfg.seed = fb_seed;
            if (!fb_out.empty()) cfg.out = fb_out;
            if (fb_jobs > 0) cfg.jobs = fb_jobs;
            const auto result = run_feret_bench(cfg);
            std::printf("%zu runs complete; report in %s\n", result.runs.size(), cfg.out.c_str());
            for (const auto& [key, ranked] : result.rankings)
                std::printf("factor %d, %s: best %s (mean %.3f)\n", key.first, key.second.c_str(),
                            ranked.front().name.c_str(), ranked.front().summary.mean);
            return 0;
        }
        if (search->parsed()) {
            ScaleSearchConfig cfg = ss_config.empty()
                                        ? ScaleSearchConfig{}
                                        : scale_search_config_from_json(load_config_file(ss_config));
            if (ss_seed_set) cfg.seed = ss_seed;
            if (!ss_out.empty()) cfg.out = ss_out;
            if (ss_jobs > 0) cfg.jobs = ss_jobs;
            if (ss_trials > 0) cfg.n_trials = ss_trials;
            const auto result = run_scale_search(cfg);
            std::printf("best scales (%.4f, %.4f, %.4f) val score %.4f (baseline %.4f)\n",
                        result.best_scales[0], result.best_scales[1], result.best_scales[2],
                        result.best_score, result.baseline.score);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
