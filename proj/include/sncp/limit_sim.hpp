#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sncp/parallel.hpp"
#include "sncp/rng.hpp"
#include "sncp/statistics.hpp"

namespace sncp {

// ---------------------------------------------------------------------------
// Variance profiles and the induced time change
// ---------------------------------------------------------------------------

// sigma^2(.) on [0,1], either constant, piecewise constant, or piecewise
// linear between knots. eta(t) = int_0^t sigma^2 / int_0^1 sigma^2 is
// integrated exactly segment by segment.
class VarianceProfile {
public:
    static VarianceProfile constant(double sigma2 = 1.0, std::string id = "constant") {
        if (sigma2 <= 0.0) throw std::invalid_argument("VarianceProfile: sigma^2 must be > 0");
        VarianceProfile p;
        p.id_ = std::move(id);
        p.knots_ = {0.0, 1.0};
        p.left_ = {sigma2};
        p.right_ = {sigma2};
        p.finalize();
        return p;
    }

    // values[i] holds sigma^2 on [break_{i-1}, break_i); breaks are the
    // interior breakpoints, strictly increasing in (0,1).
    static VarianceProfile piecewise_constant(const std::vector<double>& breaks,
                                              const std::vector<double>& values,
                                              std::string id = "piecewise_constant") {
        if (values.size() != breaks.size() + 1)
            throw std::invalid_argument("VarianceProfile: need one value per interval");
        VarianceProfile p;
        p.id_ = std::move(id);
        p.knots_.push_back(0.0);
        for (double b : breaks) {
            if (b <= p.knots_.back() || b >= 1.0)
                throw std::invalid_argument("VarianceProfile: breaks must increase within (0,1)");
            p.knots_.push_back(b);
        }
        p.knots_.push_back(1.0);
        for (double v : values) {
            if (v <= 0.0) throw std::invalid_argument("VarianceProfile: sigma^2 must be > 0");
            p.left_.push_back(v);
            p.right_.push_back(v);
        }
        p.finalize();
        return p;
    }

    // sigma^2 linear between consecutive knots; knots[0]=0, knots.back()=1.
    static VarianceProfile piecewise_linear(const std::vector<double>& knots,
                                            const std::vector<double>& values,
                                            std::string id = "piecewise_linear") {
        if (knots.size() < 2 || knots.size() != values.size())
            throw std::invalid_argument("VarianceProfile: knots/values size mismatch");
        if (knots.front() != 0.0 || knots.back() != 1.0)
            throw std::invalid_argument("VarianceProfile: knots must span [0,1]");
        VarianceProfile p;
        p.id_ = std::move(id);
        p.knots_ = knots;
        for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
            if (knots[i + 1] <= knots[i])
                throw std::invalid_argument("VarianceProfile: knots must be increasing");
            if (values[i] <= 0.0 || values[i + 1] <= 0.0)
                throw std::invalid_argument("VarianceProfile: sigma^2 must be > 0");
            p.left_.push_back(values[i]);
            p.right_.push_back(values[i + 1]);
        }
        p.finalize();
        return p;
    }

    const std::string& id() const { return id_; }

    /// total variance mass, int_0^1 sigma^2(t) dt
    double varsigma2() const { return total_; }

    /// eta(t) = int_0^t sigma^2 / int_0^1 sigma^2; eta(0)=0, eta(1)=1.
    double eta(double t) const {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
        std::size_t seg = static_cast<std::size_t>(it - knots_.begin()) - 1;
        seg = std::min(seg, left_.size() - 1);
        const double t0 = knots_[seg], t1 = knots_[seg + 1];
        const double u = (t - t0) / (t1 - t0);
        const double v0 = left_[seg], v1 = right_[seg];
        // integral of the linear segment from t0 to t
        const double partial = (t - t0) * (v0 + 0.5 * u * (v1 - v0));
        return (cum_[seg] + partial) / total_;
    }

private:
    void finalize() {
        cum_.assign(1, 0.0);
        for (std::size_t i = 0; i < left_.size(); ++i) {
            const double w = knots_[i + 1] - knots_[i];
            cum_.push_back(cum_.back() + 0.5 * w * (left_[i] + right_[i]));
        }
        total_ = cum_.back();
        if (!(total_ > 0.0)) throw std::invalid_argument("VarianceProfile: zero total variance");
    }

    std::string id_;
    std::vector<double> knots_;         // segment boundaries, 0..1
    std::vector<double> left_, right_;  // sigma^2 at segment ends
    std::vector<double> cum_;           // cumulative integral at knots
    double total_ = 0.0;
};

/// eta evaluated on the uniform grid j/m, j = 0..m.
inline std::vector<double> eta_from_sigma(const VarianceProfile& profile, std::size_t m) {
    if (m < 2) throw std::invalid_argument("eta_from_sigma: m >= 2 required");
    std::vector<double> grid(m + 1);
    for (std::size_t j = 0; j <= m; ++j)
        grid[j] = profile.eta(static_cast<double>(j) / static_cast<double>(m));
    grid[0] = 0.0;
    grid[m] = 1.0;
    return grid;
}

// ---------------------------------------------------------------------------
// Path simulation and functionals
// ---------------------------------------------------------------------------

/// W(eta(j/m)), j = 0..m: independent centered Gaussian increments with
/// variance eta(j/m) - eta((j-1)/m).
inline std::vector<double> simulate_path(const std::vector<double>& eta_grid,
                                         std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> path(eta_grid.size());
    path[0] = 0.0;
    for (std::size_t j = 1; j < eta_grid.size(); ++j) {
        const double var = std::max(0.0, eta_grid[j] - eta_grid[j - 1]);
        path[j] = path[j - 1] + std::sqrt(var) * normal(rng);
    }
    return path;
}

namespace detail {

inline TimeSeries increments_of(const std::vector<double>& path) {
    std::vector<double> inc(path.size() - 1);
    for (std::size_t j = 1; j < path.size(); ++j) inc[j - 1] = path[j] - path[j - 1];
    return TimeSeries(std::move(inc));
}

}  // namespace detail

// Discretizations of the limit functionals: grid maxima for the suprema
// and left-endpoint Riemann sums for the integrals. The 1/m weights of
// the outer and inner sums cancel, leaving exactly the self-normalized
// statistics of the increment series.
inline ExtendedStatistic functional_S(const std::vector<double>& path,
                                      QMethod method = QMethod::Envelope) {
    if (path.size() < 3) throw std::invalid_argument("functional_S: need m >= 2");
    return q_statistic(detail::increments_of(path), method);
}

inline ExtendedStatistic functional_T(const std::vector<double>& path) {
    if (path.size() < 3) throw std::invalid_argument("functional_T: need m >= 2");
    return r_statistic(detail::increments_of(path));
}

/// sup over the grid of the Brownian bridge |w(t) - t w(1)| (CUSUM limit).
inline double functional_sup_bridge(const std::vector<double>& path) {
    const std::size_t m = path.size() - 1;
    double best = 0.0;
    for (std::size_t j = 1; j < m; ++j) {
        const double t = static_cast<double>(j) / static_cast<double>(m);
        best = std::max(best, std::abs(path[j] - t * path[m]));
    }
    return best;
}

// ---------------------------------------------------------------------------
// Quantile tables
// ---------------------------------------------------------------------------

enum class FunctionalKind { S, T, SupBridge };

inline const char* to_string(FunctionalKind k) {
    switch (k) {
        case FunctionalKind::S: return "S";
        case FunctionalKind::T: return "T";
        case FunctionalKind::SupBridge: return "sup_bridge";
    }
    return "?";
}

struct QuantileTable {
    FunctionalKind kind = FunctionalKind::S;
    std::string profile_id;
    std::vector<double> levels;     // confidence levels in (0,1), increasing
    std::vector<double> quantiles;  // matching order statistics
    std::vector<double> stderrs;    // Monte-Carlo standard errors (batching)
    std::size_t m = 0;
    std::size_t runs = 0;
    std::uint64_t seed = 0;

    double quantile_at(double level) const {
        for (std::size_t i = 0; i < levels.size(); ++i)
            if (std::abs(levels[i] - level) < 1e-9) return quantiles[i];
        // linear interpolation between bracketing levels, clamped at the ends
        if (levels.empty()) throw std::runtime_error("QuantileTable: empty");
        if (level <= levels.front()) return quantiles.front();
        if (level >= levels.back()) return quantiles.back();
        std::size_t i = 1;
        while (levels[i] < level) ++i;
        const double w = (level - levels[i - 1]) / (levels[i] - levels[i - 1]);
        return quantiles[i - 1] + w * (quantiles[i] - quantiles[i - 1]);
    }
};

namespace detail {

/// ceil(level * count)-th order statistic (1-indexed), same convention as
/// the bootstrap critical value.
inline double order_statistic(std::vector<double> sorted, double level) {
    const std::size_t count = sorted.size();
    std::size_t idx = static_cast<std::size_t>(
        std::ceil(level * static_cast<double>(count)));
    idx = std::min(std::max<std::size_t>(idx, 1), count);
    return sorted[idx - 1];
}

}  // namespace detail

/// Order-statistic quantiles with batching standard errors (10 sections).
inline QuantileTable quantiles_from_sample(const std::vector<double>& sample,
                                           const std::vector<double>& levels) {
    QuantileTable table;
    table.levels = levels;
    table.runs = sample.size();

    std::vector<double> sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t batches = 10;
    const std::size_t per_batch = sample.size() / batches;

    for (double level : levels) {
        table.quantiles.push_back(detail::order_statistic(sorted, level));
        double se = 0.0;
        if (per_batch >= 10) {
            std::vector<double> batch_q;
            for (std::size_t b = 0; b < batches; ++b) {
                std::vector<double> chunk(sample.begin() + b * per_batch,
                                          sample.begin() + (b + 1) * per_batch);
                std::sort(chunk.begin(), chunk.end());
                batch_q.push_back(detail::order_statistic(std::move(chunk), level));
            }
            double mean = 0.0;
            for (double q : batch_q) mean += q;
            mean /= static_cast<double>(batches);
            double var = 0.0;
            for (double q : batch_q) var += (q - mean) * (q - mean);
            var /= static_cast<double>(batches - 1);
            se = std::sqrt(var / static_cast<double>(batches));
        }
        table.stderrs.push_back(se);
    }
    return table;
}

namespace detail {

inline double eval_functional(FunctionalKind kind, const std::vector<double>& path) {
    switch (kind) {
        case FunctionalKind::S: return functional_S(path).value;
        case FunctionalKind::T: return functional_T(path).value;
        case FunctionalKind::SupBridge: return functional_sup_bridge(path);
    }
    return 0.0;
}

}  // namespace detail

/// One functional value per run; run r always uses the stream (seed, r),
/// so the sample is identical for any worker count.
inline std::vector<double> simulate_null_sample(FunctionalKind kind,
                                                const VarianceProfile& profile,
                                                std::size_t m, std::size_t runs,
                                                std::uint64_t seed, unsigned workers = 0) {
    const auto eta_grid = eta_from_sigma(profile, m);
    std::vector<double> sample(runs);
    parallel_for(
        runs,
        [&](std::size_t r) {
            auto rng = stream_engine(seed, static_cast<std::uint64_t>(r));
            sample[r] = detail::eval_functional(kind, simulate_path(eta_grid, rng));
        },
        workers);
    return sample;
}

/// Same paths, both functionals: returns {S values, T values}.
inline std::pair<std::vector<double>, std::vector<double>> simulate_null_sample_both(
    const VarianceProfile& profile, std::size_t m, std::size_t runs, std::uint64_t seed,
    unsigned workers = 0) {
    const auto eta_grid = eta_from_sigma(profile, m);
    std::vector<double> s_sample(runs), t_sample(runs);
    parallel_for(
        runs,
        [&](std::size_t r) {
            auto rng = stream_engine(seed, static_cast<std::uint64_t>(r));
            const auto path = simulate_path(eta_grid, rng);
            const auto inc = detail::increments_of(path);
            const auto ps = cumulative_sums(inc);
            s_sample[r] = q_statistic(ps, QMethod::Envelope).value;
            t_sample[r] = r_statistic(ps).value;
        },
        workers);
    return {std::move(s_sample), std::move(t_sample)};
}

inline QuantileTable simulate_quantiles(FunctionalKind kind, const VarianceProfile& profile,
                                        std::size_t m, std::size_t runs,
                                        const std::vector<double>& levels, std::uint64_t seed,
                                        unsigned workers = 0) {
    if (m < 100) throw std::invalid_argument("simulate_quantiles: m >= 100 required");
    if (runs < 1000) throw std::invalid_argument("simulate_quantiles: runs >= 1000 required");
    auto table = quantiles_from_sample(simulate_null_sample(kind, profile, m, runs, seed, workers),
                                       levels);
    table.kind = kind;
    table.profile_id = profile.id();
    table.m = m;
    table.seed = seed;
    return table;
}

// ---------------------------------------------------------------------------
// Fixed-alternative limit: S(W_eta - (delta/varsigma) B_zeta) with an
// independent Wiener process B and the tied-down drift process
//   B_zeta(t) = (1-zeta) B(t)        for t <= zeta,
//               B(zeta) - zeta B(t)  for t >  zeta.
// zeta is snapped to the nearest grid point.
// ---------------------------------------------------------------------------

inline std::vector<double> simulate_alternative_sample(FunctionalKind kind,
                                                       const VarianceProfile& profile,
                                                       double delta, double zeta, std::size_t m,
                                                       std::size_t runs, std::uint64_t seed,
                                                       unsigned workers = 0) {
    if (zeta <= 0.0 || zeta >= 1.0)
        throw std::invalid_argument("simulate_alternative_sample: zeta in (0,1) required");
    const auto eta_grid = eta_from_sigma(profile, m);
    const double scale = delta / std::sqrt(profile.varsigma2());
    const std::size_t jz = static_cast<std::size_t>(
        std::llround(zeta * static_cast<double>(m)));

    std::vector<double> sample(runs);
    parallel_for(
        runs,
        [&](std::size_t r) {
            auto rng = stream_engine(seed, static_cast<std::uint64_t>(r));
            auto path = simulate_path(eta_grid, rng);
            // independent standard Wiener path on the same grid
            std::normal_distribution<double> normal(0.0, 1.0);
            const double step_sd = std::sqrt(1.0 / static_cast<double>(m));
            std::vector<double> b(m + 1);
            b[0] = 0.0;
            for (std::size_t j = 1; j <= m; ++j) b[j] = b[j - 1] + step_sd * normal(rng);
            for (std::size_t j = 0; j <= m; ++j) {
                const double bz = (j <= jz) ? (1.0 - zeta) * b[j] : b[jz] - zeta * b[j];
                path[j] -= scale * bz;
            }
            sample[r] = detail::eval_functional(kind, path);
        },
        workers);
    return sample;
}

inline QuantileTable simulate_alternative_limit(FunctionalKind kind,
                                                const VarianceProfile& profile, double delta,
                                                double zeta, std::size_t m, std::size_t runs,
                                                const std::vector<double>& levels,
                                                std::uint64_t seed, unsigned workers = 0) {
    auto table = quantiles_from_sample(
        simulate_alternative_sample(kind, profile, delta, zeta, m, runs, seed, workers), levels);
    table.kind = kind;
    table.profile_id = profile.id();
    table.m = m;
    table.seed = seed;
    return table;
}

}  // namespace sncp
