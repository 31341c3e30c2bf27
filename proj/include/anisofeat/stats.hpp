#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "anisofeat/rng.hpp"

namespace anisofeat {

// ---------------------------------------------------------------------------
// Special functions (no stats library dependency)
// ---------------------------------------------------------------------------

namespace detail {

// Continued fraction for the regularized incomplete beta, modified Lentz
// with a 1e-12 stopping tolerance.
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1.0e-12;
    constexpr double kTiny = 1.0e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw std::runtime_error("betacf: continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("incomplete_beta: a, b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::betacf(a, b, x) / a;
    return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// Two-sided Student-t tail probability P(|T_df| >= |t|).
inline double student_t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("student_t_two_sided_p: df must be > 0");
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

// Bootstrap mean +/- std of a metric. `samples` holds the defined
// replicates (undefined ones, where the metric returns NaN, are excluded
// and counted in n_undefined).
struct MetricSummary {
    std::string metric;
    double mean = 0.0;
    double stddev = 0.0;
    int n_boot = 0;           // number of defined replicates == samples.size()
    std::vector<double> samples;
    int n_undefined = 0;
};

inline constexpr int kDefaultBootstrapRuns = 50;

using MetricFn =
    std::function<double(std::span<const double>, std::span<const double>)>;

// Coefficient of determination, 1 - SS_res/SS_tot; NaN when the targets
// have zero variance.
inline double r2_score(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size() || targets.size() < 2)
        throw std::invalid_argument("r2_score: need >= 2 paired values");
    double mean = 0.0;
    for (double t : targets) mean += t;
    mean /= static_cast<double>(targets.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double r = targets[i] - predictions[i];
        const double d = targets[i] - mean;
        ss_res += r * r;
        ss_tot += d * d;
    }
    if (ss_tot == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 - ss_res / ss_tot;
}

inline MetricSummary bootstrap_metric(std::span<const double> predictions,
                                      std::span<const double> targets,
                                      const MetricFn& metric, int n_boot,
                                      RngStream& stream,
                                      const std::string& metric_name = "metric") {
    const std::size_t n = predictions.size();
    if (n != targets.size() || n < 2)
        throw std::invalid_argument("bootstrap_metric: need >= 2 paired values");
    if (n_boot < 2) throw std::invalid_argument("bootstrap_metric: n_boot must be >= 2");

    MetricSummary out;
    out.metric = metric_name;
    out.samples.reserve(static_cast<std::size_t>(n_boot));
    std::vector<double> p(n), t(n);
    for (int b = 0; b < n_boot; ++b) {
        const auto idx = resample_indices(stream, n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = predictions[idx[i]];
            t[i] = targets[idx[i]];
        }
        const double v = metric(p, t);
        if (std::isnan(v))
            ++out.n_undefined;
        else
            out.samples.push_back(v);
    }
    out.n_boot = static_cast<int>(out.samples.size());
    if (out.samples.empty()) return out;

    double mean = 0.0;
    for (double v : out.samples) mean += v;
    mean /= static_cast<double>(out.samples.size());
    double var = 0.0;
    for (double v : out.samples) var += (v - mean) * (v - mean);
    var = out.samples.size() > 1 ? var / static_cast<double>(out.samples.size() - 1) : 0.0;
    out.mean = mean;
    out.stddev = std::sqrt(var);
    return out;
}

// ---------------------------------------------------------------------------
// Welch t-test
// ---------------------------------------------------------------------------

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    // Set when both samples have zero variance: p is undefined there, the
    // caller only learns whether the means coincide exactly.
    bool zero_variance = false;
    bool exact_equality = false;
};

// Welch's unequal-variance t statistic with Welch-Satterthwaite degrees of
// freedom; two-sided p through the regularized incomplete beta.
inline TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        throw std::invalid_argument("welch_t_test: each sample needs >= 2 values");

    auto mean_var = [](std::span<const double> x) {
        double m = 0.0;
        for (double v : x) m += v;
        m /= static_cast<double>(x.size());
        double var = 0.0;
        for (double v : x) var += (v - m) * (v - m);
        var /= static_cast<double>(x.size() - 1);
        return std::pair<double, double>(m, var);
    };
    const auto [ma, va] = mean_var(a);
    const auto [mb, vb] = mean_var(b);
    const double sa = va / static_cast<double>(a.size());
    const double sb = vb / static_cast<double>(b.size());

    TTestResult res;
    if (sa + sb == 0.0) {
        res.zero_variance = true;
        res.exact_equality = (ma == mb);
        res.t = 0.0;
        res.p = std::numeric_limits<double>::quiet_NaN();
        return res;
    }
    res.t = (ma - mb) / std::sqrt(sa + sb);
    const double df = (sa + sb) * (sa + sb) /
                      (sa * sa / static_cast<double>(a.size() - 1) +
                       sb * sb / static_cast<double>(b.size() - 1));
    res.p = student_t_two_sided_p(res.t, df);
    return res;
}

inline constexpr double kDefaultAlpha = 0.05;

// ---------------------------------------------------------------------------
// Encoder ranking
// ---------------------------------------------------------------------------

enum class RankFlag { None, TopTwo, Best };

struct RankedEntry {
    std::string name;
    MetricSummary summary;
    RankFlag flag = RankFlag::None;
    double p_vs_leader = std::numeric_limits<double>::quiet_NaN();
};

// Orders encoders by mean (respecting the declared metric direction).
// The leader is flagged Best only when it beats every other entry with
// p < alpha; otherwise the top two are flagged TopTwo.
inline std::vector<RankedEntry> rank_encoders(
    const std::vector<std::pair<std::string, MetricSummary>>& summaries,
    double alpha = kDefaultAlpha, bool higher_is_better = true) {
    if (summaries.empty()) throw std::invalid_argument("rank_encoders: no summaries");

    std::vector<RankedEntry> out;
    out.reserve(summaries.size());
    for (const auto& [name, summary] : summaries)
        out.push_back(RankedEntry{name, summary, RankFlag::None, 1.0});

    std::stable_sort(out.begin(), out.end(), [&](const RankedEntry& x, const RankedEntry& y) {
        return higher_is_better ? x.summary.mean > y.summary.mean
                                : x.summary.mean < y.summary.mean;
    });

    out.front().p_vs_leader = std::numeric_limits<double>::quiet_NaN();
    bool leader_significant = out.size() > 1;
    for (std::size_t i = 1; i < out.size(); ++i) {
        const auto res = welch_t_test(out.front().summary.samples, out[i].summary.samples);
        out[i].p_vs_leader = res.p;
        const bool significant = !res.zero_variance && res.p < alpha;
        if (!significant) leader_significant = false;
    }

    if (out.size() == 1) {
        out.front().flag = RankFlag::Best;
    } else if (leader_significant) {
        out.front().flag = RankFlag::Best;
    } else {
        out[0].flag = RankFlag::TopTwo;
        out[1].flag = RankFlag::TopTwo;
    }
    return out;
}

}  // namespace anisofeat
