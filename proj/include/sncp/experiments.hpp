#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sncp/bootstrap.hpp"
#include "sncp/dgp.hpp"
#include "sncp/limit_sim.hpp"
#include "sncp/parallel.hpp"
#include "sncp/statistics.hpp"

namespace sncp {

enum class Method { QAsymptotic, RAsymptotic, QBootstrap, RBootstrap, CusumM };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::QAsymptotic: return "q_asymptotic";
        case Method::RAsymptotic: return "r_asymptotic";
        case Method::QBootstrap: return "q_bootstrap";
        case Method::RBootstrap: return "r_bootstrap";
        case Method::CusumM: return "cusum";
    }
    return "?";
}

struct Cell {
    std::string id;
    DgpSpec spec;
};

struct ExperimentConfig {
    std::vector<Cell> cells;
    std::vector<Method> methods;
    std::size_t repetitions = 1000;  // paper value 5000
    std::size_t B = 500;             // paper value 2000
    std::vector<double> alphas = {0.01, 0.05, 0.10};
    std::uint64_t master_seed = 1;
    std::size_t cusum_M_divisor = 10;  // M = n/10 rule of thumb
    // simulated quantile tables, required by the asymptotic/CUSUM methods
    std::optional<QuantileTable> s_table;
    std::optional<QuantileTable> t_table;
    std::optional<QuantileTable> bridge_table;
    unsigned workers = 0;

    void validate() const {
        if (repetitions < 1) throw std::invalid_argument("ExperimentConfig: repetitions >= 1");
        for (double a : alphas)
            if (!(a > 0.0 && a < 1.0))
                throw std::invalid_argument("ExperimentConfig: alphas in (0,1)");
        for (Method m : methods) {
            if (m == Method::QAsymptotic && !s_table)
                throw std::invalid_argument("ExperimentConfig: q_asymptotic needs an S table");
            if (m == Method::RAsymptotic && !t_table)
                throw std::invalid_argument("ExperimentConfig: r_asymptotic needs a T table");
            if (m == Method::CusumM && !bridge_table)
                throw std::invalid_argument("ExperimentConfig: cusum needs a bridge table");
        }
    }
};

struct RejectionEntry {
    std::string cell;
    Method method = Method::RBootstrap;
    double alpha = 0.05;
    double frequency = 0.0;
    double std_error = 0.0;  // binomial, sqrt(p(1-p)/reps)
    std::size_t repetitions = 0;
    std::size_t degenerate = 0;  // reps where the statistic degenerated
};

struct RejectionTable {
    std::vector<RejectionEntry> entries;

    const RejectionEntry& find(const std::string& cell, Method method, double alpha) const {
        for (const auto& e : entries)
            if (e.cell == cell && e.method == method && std::abs(e.alpha - alpha) < 1e-12)
                return e;
        throw std::out_of_range("RejectionTable: no such entry");
    }
};

namespace detail {

inline std::uint64_t rep_seed(std::uint64_t master, const std::string& cell_id,
                              std::size_t rep) {
    return mix_seed(master, hash_string(cell_id), static_cast<std::uint64_t>(rep));
}

}  // namespace detail

/// Empirical rejection frequencies over all (cell, method, alpha) tuples.
/// Per-repetition seeds depend only on (master seed, cell id, rep index).
inline RejectionTable rejection_rates(const ExperimentConfig& cfg) {
    cfg.validate();
    RejectionTable table;

    for (const auto& cell : cfg.cells) {
        const std::size_t reps = cfg.repetitions;
        const std::size_t na = cfg.alphas.size();
        const std::size_t nm = cfg.methods.size();
        std::vector<unsigned char> reject(reps * nm * na, 0);
        std::vector<unsigned char> degen(reps * nm, 0);

        parallel_for(
            reps,
            [&](std::size_t r) {
                const std::uint64_t rs = detail::rep_seed(cfg.master_seed, cell.id, r);
                const TimeSeries series = generate(cell.spec, rs);
                const auto ps = cumulative_sums(series);

                for (std::size_t mi = 0; mi < nm; ++mi) {
                    const Method method = cfg.methods[mi];
                    auto record = [&](std::size_t ai, bool rej) {
                        reject[(r * nm + mi) * na + ai] = rej ? 1 : 0;
                    };
                    switch (method) {
                        case Method::QAsymptotic:
                        case Method::RAsymptotic: {
                            const auto stat = (method == Method::QAsymptotic)
                                                  ? q_statistic(ps, QMethod::Envelope)
                                                  : r_statistic(ps);
                            const auto& tab = (method == Method::QAsymptotic) ? *cfg.s_table
                                                                              : *cfg.t_table;
                            degen[r * nm + mi] = stat.degenerate;
                            for (std::size_t ai = 0; ai < na; ++ai)
                                record(ai, stat.is_infinite() ||
                                               stat.value >
                                                   tab.quantile_at(1.0 - cfg.alphas[ai]));
                            break;
                        }
                        case Method::QBootstrap:
                        case Method::RBootstrap: {
                            BootstrapConfig bc;
                            bc.B = cfg.B;
                            bc.statistic_kind = (method == Method::QBootstrap) ? StatKind::Q
                                                                               : StatKind::R;
                            bc.seed = mix_seed(rs, 0xB007ULL,
                                               static_cast<std::uint64_t>(mi));
                            bc.workers = 1;  // parallelism lives at the rep level
                            const auto dist = wild_replicates(series, bc);
                            degen[r * nm + mi] = dist.observed.degenerate;
                            for (std::size_t ai = 0; ai < na; ++ai)
                                record(ai, dist.observed.is_infinite() ||
                                               dist.observed.value >
                                                   critical_value(dist, cfg.alphas[ai]));
                            break;
                        }
                        case Method::CusumM: {
                            const std::size_t M = std::max<std::size_t>(
                                1, cell.spec.n / cfg.cusum_M_divisor);
                            const auto stat = cusum_statistic(series, M);
                            degen[r * nm + mi] = !stat.has_value();
                            for (std::size_t ai = 0; ai < na; ++ai)
                                record(ai, stat.has_value() &&
                                               *stat > cfg.bridge_table->quantile_at(
                                                           1.0 - cfg.alphas[ai]));
                            break;
                        }
                    }
                }
            },
            cfg.workers);

        for (std::size_t mi = 0; mi < nm; ++mi) {
            std::size_t degen_count = 0;
            for (std::size_t r = 0; r < reps; ++r) degen_count += degen[r * nm + mi];
            for (std::size_t ai = 0; ai < na; ++ai) {
                std::size_t hits = 0;
                for (std::size_t r = 0; r < reps; ++r)
                    hits += reject[(r * nm + mi) * na + ai];
                RejectionEntry e;
                e.cell = cell.id;
                e.method = cfg.methods[mi];
                e.alpha = cfg.alphas[ai];
                e.repetitions = reps;
                e.degenerate = degen_count;
                e.frequency = static_cast<double>(hits) / static_cast<double>(reps);
                e.std_error = std::sqrt(e.frequency * (1.0 - e.frequency) /
                                        static_cast<double>(reps));
                table.entries.push_back(std::move(e));
            }
        }
    }
    return table;
}

/// Observed statistic per repetition (for adjusted size-power curves).
inline std::vector<double> statistic_sample(const Cell& cell, StatKind kind,
                                            std::size_t reps, std::uint64_t master_seed,
                                            unsigned workers = 0) {
    std::vector<double> out(reps);
    parallel_for(
        reps,
        [&](std::size_t r) {
            const auto series =
                generate(cell.spec, detail::rep_seed(master_seed, cell.id, r));
            const auto ps = cumulative_sums(series);
            out[r] = (kind == StatKind::Q) ? q_statistic(ps, QMethod::Envelope).value
                                           : r_statistic(ps).value;
        },
        workers);
    return out;
}

struct CurvePoint {
    double threshold = 0.0;
    double size = 0.0;   // empirical null rejection rate at the threshold
    double power = 0.0;  // empirical alternative rejection rate
};

// ROC-style adjusted size-power curve: thresholds sweep the sorted null
// statistics, size and power count strict exceedances. Endpoints (0,0)
// and (1,1) are always included.
inline std::vector<CurvePoint> adjusted_size_power(const std::vector<double>& null_sample,
                                                   const std::vector<double>& alt_sample) {
    if (null_sample.empty() || alt_sample.empty())
        throw std::invalid_argument("adjusted_size_power: empty sample");
    std::vector<double> null_sorted = null_sample;
    std::vector<double> alt_sorted = alt_sample;
    std::sort(null_sorted.begin(), null_sorted.end());
    std::sort(alt_sorted.begin(), alt_sorted.end());

    auto frac_above = [](const std::vector<double>& sorted, double t) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
        return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
    };

    std::vector<CurvePoint> curve;
    curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    for (auto it = null_sorted.rbegin(); it != null_sorted.rend(); ++it) {
        if (!curve.empty() && curve.back().threshold == *it) continue;
        curve.push_back({*it, frac_above(null_sorted, *it), frac_above(alt_sorted, *it)});
    }
    curve.push_back({-std::numeric_limits<double>::infinity(), 1.0, 1.0});
    return curve;
}

/// tau_hat / n over repetitions of an alternative cell.
inline std::vector<double> estimator_distribution(const Cell& cell, std::size_t reps,
                                                  std::uint64_t master_seed,
                                                  unsigned workers = 0) {
    if (!cell.spec.tau)
        throw std::invalid_argument("estimator_distribution: alternative cell required");
    std::vector<double> out(reps);
    parallel_for(
        reps,
        [&](std::size_t r) {
            const auto series =
                generate(cell.spec, detail::rep_seed(master_seed, cell.id, r));
            out[r] = static_cast<double>(changepoint_estimate(series).tau_hat) /
                     static_cast<double>(cell.spec.n);
        },
        workers);
    return out;
}

// ---------------------------------------------------------------------------
// Extreme heteroscedasticity scenario: AR(1) errors, first quarter of the
// series scaled by 10, n = 200. Compares the bootstrap against the
// (deliberately misspecified) eta(t)=t asymptotics and against the
// correct-eta asymptotics.
// ---------------------------------------------------------------------------

struct ExtremeScenarioConfig {
    std::uint64_t seed = 1;
    std::size_t reps = 1000;
    std::size_t B = 500;
    std::size_t n = 200;
    double delta = 1.0;  // alternative shift at tau = n/2
    double alpha = 0.05;
    std::size_t sim_m = 500;      // grid for the internal quantile tables
    std::size_t sim_runs = 20000;
    unsigned workers = 0;
};

struct ExtremeScenarioResult {
    // empirical rejection rates at the configured alpha
    double q_asym_linear_size = 0, r_asym_linear_size = 0;
    double q_asym_true_size = 0, r_asym_true_size = 0;
    double q_boot_size = 0, r_boot_size = 0;
    double q_asym_linear_power = 0, r_asym_linear_power = 0;
    double q_asym_true_power = 0, r_asym_true_power = 0;
    double q_boot_power = 0, r_boot_power = 0;
    std::size_t reps = 0;
    double alpha = 0.05;
};

inline VarianceProfile extreme_scenario_profile() {
    // sigma^2 = 100 on the first quarter, 1 afterwards; eta(t) = 400t/103
    // on [0,1/4), (99 + 4t)/103 on [1/4,1]
    return VarianceProfile::piecewise_constant({0.25}, {100.0, 1.0}, "first-quarter-x10");
}

inline ExtremeScenarioResult extreme_hetero_scenario(const ExtremeScenarioConfig& cfg) {
    const auto linear = VarianceProfile::constant();
    const auto true_profile = extreme_scenario_profile();

    auto [s_lin, t_lin] = simulate_null_sample_both(linear, cfg.sim_m, cfg.sim_runs,
                                                    mix_seed(cfg.seed, 0x51ULL), cfg.workers);
    auto [s_tru, t_tru] = simulate_null_sample_both(true_profile, cfg.sim_m, cfg.sim_runs,
                                                    mix_seed(cfg.seed, 0x52ULL), cfg.workers);
    const double level = 1.0 - cfg.alpha;
    std::vector<double> lv = {level};
    const double q_crit_lin = quantiles_from_sample(s_lin, lv).quantiles[0];
    const double r_crit_lin = quantiles_from_sample(t_lin, lv).quantiles[0];
    const double q_crit_tru = quantiles_from_sample(s_tru, lv).quantiles[0];
    const double r_crit_tru = quantiles_from_sample(t_tru, lv).quantiles[0];

    const std::size_t n = cfg.n;
    const std::size_t quarter = n / 4;
    const std::size_t tau = n / 2;

    // counters: [null/alt][method]
    enum { QAL, RAL, QAT, RAT, QB, RB, NMETH };
    std::vector<unsigned> counts(2 * NMETH, 0);
    std::vector<unsigned char> hits(cfg.reps * 2 * NMETH, 0);

    DgpSpec err_spec;
    err_spec.n = n;
    err_spec.errors = ErrorModel::AR1;
    err_spec.innovations = Innovations::Normal;

    parallel_for(
        cfg.reps,
        [&](std::size_t r) {
            const std::uint64_t rs = detail::rep_seed(cfg.seed, "extreme", r);
            auto errors = generate_errors(err_spec, rs);
            for (std::size_t k = 0; k < quarter; ++k) errors[k] *= 10.0;

            for (int alt = 0; alt < 2; ++alt) {
                std::vector<double> y = errors;
                if (alt)
                    for (std::size_t k = tau; k < n; ++k) y[k] += cfg.delta;
                const TimeSeries series(std::move(y));
                const auto ps = cumulative_sums(series);
                const auto q = q_statistic(ps, QMethod::Envelope);
                const auto rr = r_statistic(ps);
                auto rec = [&](int meth, bool rej) {
                    hits[(r * 2 + alt) * NMETH + meth] = rej ? 1 : 0;
                };
                rec(QAL, q.is_infinite() || q.value > q_crit_lin);
                rec(RAL, rr.is_infinite() || rr.value > r_crit_lin);
                rec(QAT, q.is_infinite() || q.value > q_crit_tru);
                rec(RAT, rr.is_infinite() || rr.value > r_crit_tru);

                BootstrapConfig bq;
                bq.B = cfg.B;
                bq.statistic_kind = StatKind::Q;
                bq.seed = mix_seed(rs, 0xB007ULL, static_cast<std::uint64_t>(alt));
                bq.alpha = cfg.alpha;
                bq.workers = 1;
                const auto dq = wild_replicates(series, bq);
                rec(QB, dq.observed.is_infinite() ||
                            dq.observed.value > critical_value(dq, cfg.alpha));

                BootstrapConfig br = bq;
                br.statistic_kind = StatKind::R;
                br.seed = mix_seed(rs, 0xB008ULL, static_cast<std::uint64_t>(alt));
                const auto dr = wild_replicates(series, br);
                rec(RB, dr.observed.is_infinite() ||
                            dr.observed.value > critical_value(dr, cfg.alpha));
            }
        },
        cfg.workers);

    for (std::size_t r = 0; r < cfg.reps; ++r)
        for (int alt = 0; alt < 2; ++alt)
            for (int meth = 0; meth < NMETH; ++meth)
                counts[alt * NMETH + meth] += hits[(r * 2 + alt) * NMETH + meth];

    auto rate = [&](int alt, int meth) {
        return static_cast<double>(counts[alt * NMETH + meth]) /
               static_cast<double>(cfg.reps);
    };

    ExtremeScenarioResult out;
    out.reps = cfg.reps;
    out.alpha = cfg.alpha;
    out.q_asym_linear_size = rate(0, QAL);
    out.r_asym_linear_size = rate(0, RAL);
    out.q_asym_true_size = rate(0, QAT);
    out.r_asym_true_size = rate(0, RAT);
    out.q_boot_size = rate(0, QB);
    out.r_boot_size = rate(0, RB);
    out.q_asym_linear_power = rate(1, QAL);
    out.r_asym_linear_power = rate(1, RAL);
    out.q_asym_true_power = rate(1, QAT);
    out.r_asym_true_power = rate(1, RAT);
    out.q_boot_power = rate(1, QB);
    out.r_boot_power = rate(1, RB);
    return out;
}

}  // namespace sncp
