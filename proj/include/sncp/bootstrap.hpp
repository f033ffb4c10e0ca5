#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "sncp/limit_sim.hpp"
#include "sncp/parallel.hpp"
#include "sncp/rng.hpp"
#include "sncp/statistics.hpp"

namespace sncp {

enum class StatKind { Q, R };

inline const char* to_string(StatKind k) { return k == StatKind::Q ? "Q" : "R"; }

inline FunctionalKind limit_functional(StatKind k) {
    return k == StatKind::Q ? FunctionalKind::S : FunctionalKind::T;
}

struct BootstrapConfig {
    std::size_t B = 2000;
    std::uint64_t seed = 0;
    StatKind statistic_kind = StatKind::R;
    double alpha = 0.05;
    QMethod q_method = QMethod::Envelope;
    unsigned workers = 0;

    void validate() const {
        if (B < 1) throw std::invalid_argument("BootstrapConfig: B >= 1 required");
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("BootstrapConfig: alpha in (0,1) required");
    }
};

struct BootstrapDistribution {
    std::vector<double> replicates;  // sorted non-decreasing, length B
    ExtendedStatistic observed;
    BootstrapConfig config;
};

namespace detail {

inline double evaluate_statistic(const PrefixSums& ps, StatKind kind, QMethod q_method) {
    return kind == StatKind::Q ? q_statistic(ps, q_method).value : r_statistic(ps).value;
}

}  // namespace detail

// Wild bootstrap: replicate b multiplies the centered observations by an
// i.i.d. N(0,1) sample drawn from the stream (seed, b). Streams are bound
// to b, not to workers, so the replicate set is identical for any degree
// of parallelism.
inline BootstrapDistribution wild_replicates(const TimeSeries& series,
                                             const BootstrapConfig& cfg) {
    cfg.validate();
    const auto ps = cumulative_sums(series);
    const std::size_t n = ps.n;

    BootstrapDistribution dist;
    dist.config = cfg;
    dist.observed = (cfg.statistic_kind == StatKind::Q) ? q_statistic(ps, cfg.q_method)
                                                        : r_statistic(ps);
    dist.replicates.resize(cfg.B);

    std::vector<double> centered(n);
    for (std::size_t k = 0; k < n; ++k) centered[k] = ps.Y[k] - ps.mean;

    parallel_for(
        cfg.B,
        [&](std::size_t b) {
            auto rng = stream_engine(cfg.seed, static_cast<std::uint64_t>(b + 1));
            std::normal_distribution<double> normal(0.0, 1.0);
            std::vector<double> star(n);
            for (std::size_t k = 0; k < n; ++k) star[k] = centered[k] * normal(rng);
            const auto star_ps = cumulative_sums(TimeSeries(std::move(star)));
            dist.replicates[b] = detail::evaluate_statistic(star_ps, cfg.statistic_kind,
                                                            cfg.q_method);
        },
        cfg.workers);

    std::sort(dist.replicates.begin(), dist.replicates.end());
    return dist;
}

/// ceil((1-alpha) * B)-th order statistic of the replicates (1-indexed).
inline double critical_value(const BootstrapDistribution& dist, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("critical_value: alpha in (0,1) required");
    const std::size_t B = dist.replicates.size();
    std::size_t idx = static_cast<std::size_t>(
        std::ceil((1.0 - alpha) * static_cast<double>(B)));
    idx = std::min(std::max<std::size_t>(idx, 1), B);
    return dist.replicates[idx - 1];
}

/// (1 + #{replicates >= observed}) / (B + 1), never 0.
inline double p_value(const BootstrapDistribution& dist) {
    const std::size_t B = dist.replicates.size();
    if (dist.observed.is_infinite()) return 1.0 / static_cast<double>(B + 1);
    const double obs = dist.observed.value;
    const auto first = std::lower_bound(dist.replicates.begin(), dist.replicates.end(), obs);
    const std::size_t count = static_cast<std::size_t>(dist.replicates.end() - first);
    return static_cast<double>(1 + count) / static_cast<double>(B + 1);
}

enum class TestMethod { Asymptotic, Bootstrap };

inline const char* to_string(TestMethod m) {
    return m == TestMethod::Asymptotic ? "asymptotic" : "bootstrap";
}

struct TestReport {
    StatKind statistic_kind = StatKind::R;
    double observed = 0.0;  // may be +inf
    bool observed_degenerate = false;
    TestMethod method = TestMethod::Bootstrap;
    double critical_value = 0.0;
    double p_value = 1.0;
    bool reject = false;
    double alpha = 0.05;
    std::optional<std::size_t> tau_hat;  // populated when reject
    std::uint64_t seed = 0;
    std::size_t B = 0;
};

inline TestReport run_test(const TimeSeries& series, const BootstrapConfig& cfg) {
    const auto dist = wild_replicates(series, cfg);

    TestReport report;
    report.statistic_kind = cfg.statistic_kind;
    report.observed = dist.observed.value;
    report.observed_degenerate = dist.observed.degenerate;
    report.method = TestMethod::Bootstrap;
    report.critical_value = critical_value(dist, cfg.alpha);
    report.p_value = p_value(dist);
    report.alpha = cfg.alpha;
    report.seed = cfg.seed;
    report.B = cfg.B;
    report.reject = dist.observed.is_infinite() || report.observed > report.critical_value;
    if (report.reject) report.tau_hat = changepoint_estimate(series).tau_hat;
    return report;
}

// Asymptotic test against a simulated quantile table for the assumed eta.
// The table must cover the requested confidence level; the p-value is
// resolved on the table's level grid (interpolated, clamped at the ends).
inline TestReport run_test_asymptotic(const TimeSeries& series, StatKind kind,
                                      const QuantileTable& table, double alpha,
                                      QMethod q_method = QMethod::Direct) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("run_test_asymptotic: alpha in (0,1) required");
    if (table.kind != limit_functional(kind))
        throw std::invalid_argument("run_test_asymptotic: quantile table kind mismatch");

    const auto ps = cumulative_sums(series);
    const ExtendedStatistic observed =
        (kind == StatKind::Q) ? q_statistic(ps, q_method) : r_statistic(ps);

    TestReport report;
    report.statistic_kind = kind;
    report.observed = observed.value;
    report.observed_degenerate = observed.degenerate;
    report.method = TestMethod::Asymptotic;
    report.alpha = alpha;
    report.critical_value = table.quantile_at(1.0 - alpha);
    report.reject = observed.is_infinite() || report.observed > report.critical_value;

    // p-value from the table grid
    if (observed.is_infinite() || report.observed > table.quantiles.back()) {
        report.p_value = 1.0 - table.levels.back();
    } else if (report.observed <= table.quantiles.front()) {
        report.p_value = 1.0;
    } else {
        std::size_t i = 1;
        while (table.quantiles[i] < report.observed) ++i;
        const double w = (report.observed - table.quantiles[i - 1]) /
                         (table.quantiles[i] - table.quantiles[i - 1]);
        const double level = table.levels[i - 1] + w * (table.levels[i] - table.levels[i - 1]);
        report.p_value = 1.0 - level;
    }
    if (report.reject) report.tau_hat = changepoint_estimate(ps).tau_hat;
    return report;
}

}  // namespace sncp
