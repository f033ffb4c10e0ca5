#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>

#include "sncp/envelope.hpp"
#include "sncp/series.hpp"

namespace sncp {

/// Non-negative extended real with a flag recording that a 0-denominator
/// convention fired somewhere in the evaluation.
struct ExtendedStatistic {
    double value = 0.0;
    bool degenerate = false;

    bool is_infinite() const { return std::isinf(value); }
};

enum class QMethod {
    Direct,    // O(n^2) evaluation of the cumulative-sum form
    Envelope,  // O(n log n) via upper envelopes of the linear families
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Denominator pieces in residual form, i.e. partial sums of observations
// centered by the segment mean. This is the form in which structurally
// exact zeros (constant segments, perfect steps) cancel exactly, so the
// near-zero fallback below and the naive oracles classify degeneracy the
// same way.

inline double segment_mean_fresh(const PrefixSums& ps, std::size_t first,
                                 std::size_t last) {
    // fresh summation over the observations; differences of running
    // prefix sums do not cancel exactly for short segments
    KahanSum s;
    for (std::size_t i = first; i <= last; ++i) s.add(ps.Y[i - 1]);
    return s.value() / static_cast<double>(last - first + 1);
}

inline double residual_front_max(const PrefixSums& ps, std::size_t k) {
    const double mean = segment_mean_fresh(ps, 1, k);
    KahanSum s;
    double best = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
        s.add(ps.Y[i - 1] - mean);
        best = std::max(best, std::abs(s.value()));
    }
    return best;
}

inline double residual_tail_max(const PrefixSums& ps, std::size_t k) {
    const std::size_t n = ps.n;
    if (k >= n) return 0.0;
    const double mean = segment_mean_fresh(ps, k + 1, n);
    KahanSum s;
    double best = 0.0;
    for (std::size_t i = n; i > k; --i) {
        s.add(ps.Y[i - 1] - mean);
        best = std::max(best, std::abs(s.value()));
    }
    return best;
}

inline double residual_front_sumsq(const PrefixSums& ps, std::size_t k) {
    const double mean = segment_mean_fresh(ps, 1, k);
    KahanSum s, ss;
    for (std::size_t i = 1; i <= k; ++i) {
        s.add(ps.Y[i - 1] - mean);
        ss.add(s.value() * s.value());
    }
    return ss.value();
}

inline double residual_tail_sumsq(const PrefixSums& ps, std::size_t k) {
    const std::size_t n = ps.n;
    if (k >= n) return 0.0;
    const double mean = segment_mean_fresh(ps, k + 1, n);
    KahanSum s, ss;
    for (std::size_t i = n; i > k; --i) {
        s.add(ps.Y[i - 1] - mean);
        ss.add(s.value() * s.value());
    }
    return ss.value();
}

// Zero classification: amounts at or below 1e-10 relative to the data
// scale are indistinguishable from exact zeros at double precision (plain
// vs compensated summation orders differ well below that), so both the
// fast paths and the naive oracles snap them to 0 before the degeneracy
// conventions apply.
inline double snap_zero(double x, double tol) { return x <= tol ? 0.0 : x; }

inline double denom_tolerance(const PrefixSums& ps) { return 1e-10 * ps.max_abs_V; }

inline double denom_sq_tolerance(const PrefixSums& ps) {
    return 1e-12 * static_cast<double>(ps.n) * ps.max_abs_V * ps.max_abs_V;
}

// D(k) = max_{1<=i<=k}|V(i) - (i/k)V(k)| + max_{k<i<=n}|~V(i) - ((n-i)/(n-k))~V(k)|
// evaluated multiply-first; values at or below the tolerance are
// recomputed in residual form so that exact zeros stay exact.
inline double q_denominator_direct(const PrefixSums& ps, std::size_t k) {
    const std::size_t n = ps.n;
    const double tol = denom_tolerance(ps);
    const double vk = ps.V[k];
    double front = 0.0;
    for (std::size_t i = 1; i <= k; ++i)
        front = std::max(front, std::abs(static_cast<double>(k) * ps.V[i] -
                                         static_cast<double>(i) * vk));
    front /= static_cast<double>(k);
    if (front <= tol) front = snap_zero(residual_front_max(ps, k), tol);

    double tail = 0.0;
    if (k < n) {
        const double wk = ps.tail(k);
        for (std::size_t i = k + 1; i <= n; ++i)
            tail = std::max(tail, std::abs(static_cast<double>(n - k) * ps.tail(i) -
                                           static_cast<double>(n - i) * wk));
        tail /= static_cast<double>(n - k);
        if (tail <= tol) tail = snap_zero(residual_tail_max(ps, k), tol);
    }
    return front + tail;
}

template <typename DenomFn>
ExtendedStatistic q_from_denominators(const PrefixSums& ps, DenomFn&& denom) {
    ExtendedStatistic out;
    const double tol = denom_tolerance(ps);
    for (std::size_t k = 1; k <= ps.n; ++k) {
        const double num = snap_zero(std::abs(ps.C[k]), tol);
        const double d = denom(k);
        if (d == 0.0) {
            out.degenerate = true;
            if (num > 0.0) out.value = kInf;
        } else if (num > 0.0 && !out.is_infinite()) {
            out.value = std::max(out.value, num / d);
        }
    }
    return out;
}

inline ExtendedStatistic q_statistic_envelope(const PrefixSums& ps) {
    const std::size_t n = ps.n;
    const double tol = denom_tolerance(ps);

    // Tail pass, k = n-1 .. 1: at step k the lines ~V(i) - (n-i)*d for
    // i = k+1..n are present; slopes -(n-i) arrive in decreasing order.
    std::vector<double> tail(n + 1, 0.0);
    {
        AbsLineEnvelope env;
        env.reserve(n);
        for (std::size_t k = n - 1; k >= 1; --k) {
            const std::size_t i = k + 1;
            env.add(ps.tail(i), -static_cast<double>(n - i));
            const double d = ps.tail(k) / static_cast<double>(n - k);
            double t = env.max_abs_at(d);
            if (t <= tol) t = snap_zero(residual_tail_max(ps, k), tol);
            tail[k] = t;
            if (k == 1) break;  // avoid size_t wrap
        }
    }

    // Front pass, k = 1 .. n: lines V(i) - i*c, slopes -i decreasing.
    AbsLineEnvelope env;
    env.reserve(n);
    std::vector<double> front(n + 1, 0.0);
    for (std::size_t k = 1; k <= n; ++k) {
        env.add(ps.V[k], -static_cast<double>(k));
        const double c = ps.V[k] / static_cast<double>(k);
        double f = env.max_abs_at(c);
        if (f <= tol) f = snap_zero(residual_front_max(ps, k), tol);
        front[k] = f;
    }

    return q_from_denominators(ps, [&](std::size_t k) { return front[k] + tail[k]; });
}

}  // namespace detail

/// Supremum-type self-normalized statistic over the cumulative sums.
inline ExtendedStatistic q_statistic(const PrefixSums& ps, QMethod method = QMethod::Direct) {
    if (ps.n < 2) throw std::invalid_argument("q_statistic: n >= 2 required");
    if (method == QMethod::Envelope) return detail::q_statistic_envelope(ps);
    return detail::q_from_denominators(
        ps, [&](std::size_t k) { return detail::q_denominator_direct(ps, k); });
}

// Integral-type self-normalized statistic, O(n) total. The per-k
// denominator expands into the stored prefix moments:
//   sum_{i<=k} (V(i) - (i/k)V(k))^2
//     = SV2(k) - 2(V(k)/k) SiV(k) + (V(k)/k)^2 Si2(k)
// and the tail sum expands the same way after writing
//   ~V(i) - c(n-i) = a - V(i) + c i  with  c = ~V(k)/(n-k), a = V(n) - c n.
inline ExtendedStatistic r_statistic(const PrefixSums& ps) {
    const std::size_t n = ps.n;
    if (n < 2) throw std::invalid_argument("r_statistic: n >= 2 required");
    const double tol = detail::denom_sq_tolerance(ps);
    const double num_tol = detail::denom_tolerance(ps);

    ExtendedStatistic out;
    KahanSum total;
    for (std::size_t k = 1; k <= n; ++k) {
        const double ck = ps.V[k] / static_cast<double>(k);
        double A = ps.SV2[k] - 2.0 * ck * ps.SiV[k] + ck * ck * ps.Si2[k];
        if (A <= tol) A = detail::snap_zero(detail::residual_front_sumsq(ps, k), tol);

        double B = 0.0;
        if (k < n) {
            const double c = ps.tail(k) / static_cast<double>(n - k);
            const double a = ps.V[n] - c * static_cast<double>(n);
            B = static_cast<double>(n - k) * a * a + (ps.SV2[n] - ps.SV2[k]) +
                c * c * (ps.Si2[n] - ps.Si2[k]) - 2.0 * a * (ps.SV1[n] - ps.SV1[k]) +
                2.0 * a * c * (ps.Si1[n] - ps.Si1[k]) - 2.0 * c * (ps.SiV[n] - ps.SiV[k]);
            if (B <= tol) B = detail::snap_zero(detail::residual_tail_sumsq(ps, k), tol);
        }

        const double e = A + B;
        const double num = detail::snap_zero(std::abs(ps.C[k]), num_tol);
        if (e == 0.0) {
            out.degenerate = true;
            if (num != 0.0) out.value = detail::kInf;
        } else if (num != 0.0) {
            total.add(num * num / e);
        }
    }
    if (!out.is_infinite()) out.value = total.value();
    return out;
}

inline ExtendedStatistic q_statistic(const TimeSeries& series, QMethod method = QMethod::Direct) {
    return q_statistic(cumulative_sums(series), method);
}

inline ExtendedStatistic r_statistic(const TimeSeries& series) {
    return r_statistic(cumulative_sums(series));
}

// ---------------------------------------------------------------------------
// Naive oracles: literal transcription of the segment-mean forms of the
// statistics, with fresh inner summations. Deliberately independent of
// the prefix-sum path; sizes are capped because the loops are cubic.
// ---------------------------------------------------------------------------

namespace detail {

constexpr std::size_t kNaiveSizeCap = 4096;

inline double naive_mean(std::span<const double> y, std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = i; k <= j; ++k) s += y[k - 1];
    return s / static_cast<double>(j - i + 1);
}

inline double naive_front_max(std::span<const double> y, std::size_t k) {
    const double mean = naive_mean(y, 1, k);
    double best = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
        double s = 0.0;
        for (std::size_t j = 1; j <= i; ++j) s += y[j - 1] - mean;
        best = std::max(best, std::abs(s));
    }
    return best;
}

inline double naive_tail_max(std::span<const double> y, std::size_t k, std::size_t n) {
    if (k >= n) return 0.0;
    const double mean = naive_mean(y, k + 1, n);
    double best = 0.0;
    for (std::size_t i = k + 1; i <= n; ++i) {
        double s = 0.0;
        for (std::size_t j = i; j <= n; ++j) s += y[j - 1] - mean;
        best = std::max(best, std::abs(s));
    }
    return best;
}

inline double naive_front_sumsq(std::span<const double> y, std::size_t k) {
    const double mean = naive_mean(y, 1, k);
    double total = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
        double s = 0.0;
        for (std::size_t j = 1; j <= i; ++j) s += y[j - 1] - mean;
        total += s * s;
    }
    return total;
}

inline double naive_tail_sumsq(std::span<const double> y, std::size_t k, std::size_t n) {
    if (k >= n) return 0.0;
    const double mean = naive_mean(y, k + 1, n);
    double total = 0.0;
    for (std::size_t i = k + 1; i <= n; ++i) {
        double s = 0.0;
        for (std::size_t j = i; j <= n; ++j) s += y[j - 1] - mean;
        total += s * s;
    }
    return total;
}

inline double naive_scale(std::span<const double> y) {
    double s = 0.0, best = 0.0;
    for (double v : y) {
        s += v;
        best = std::max(best, std::abs(s));
    }
    return best;
}

}  // namespace detail

inline ExtendedStatistic q_statistic_naive(const TimeSeries& series) {
    const std::size_t n = series.size();
    if (n > detail::kNaiveSizeCap)
        throw std::invalid_argument("q_statistic_naive: series too long for the cubic oracle");
    const auto y = series.values();
    const double mean = detail::naive_mean(y, 1, n);
    const double tol = 1e-10 * detail::naive_scale(y);

    ExtendedStatistic out;
    for (std::size_t k = 1; k <= n; ++k) {
        double num = 0.0;
        for (std::size_t i = 1; i <= k; ++i) num += y[i - 1] - mean;
        num = detail::snap_zero(std::abs(num), tol);
        const double d = detail::snap_zero(detail::naive_front_max(y, k), tol) +
                         detail::snap_zero(detail::naive_tail_max(y, k, n), tol);
        if (d == 0.0) {
            out.degenerate = true;
            if (num > 0.0) out.value = detail::kInf;
        } else if (num > 0.0 && !out.is_infinite()) {
            out.value = std::max(out.value, num / d);
        }
    }
    return out;
}

inline ExtendedStatistic r_statistic_naive(const TimeSeries& series) {
    const std::size_t n = series.size();
    if (n > detail::kNaiveSizeCap)
        throw std::invalid_argument("r_statistic_naive: series too long for the cubic oracle");
    const auto y = series.values();
    const double mean = detail::naive_mean(y, 1, n);
    const double scale = detail::naive_scale(y);
    const double tol = 1e-10 * scale;
    const double sq_tol = 1e-12 * static_cast<double>(n) * scale * scale;

    ExtendedStatistic out;
    double total = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        double num = 0.0;
        for (std::size_t i = 1; i <= k; ++i) num += y[i - 1] - mean;
        num = detail::snap_zero(std::abs(num), tol);
        const double e = detail::snap_zero(detail::naive_front_sumsq(y, k), sq_tol) +
                         detail::snap_zero(detail::naive_tail_sumsq(y, k, n), sq_tol);
        if (e == 0.0) {
            out.degenerate = true;
            if (num != 0.0) out.value = detail::kInf;
        } else if (num != 0.0) {
            total += num * num / e;
        }
    }
    if (!out.is_infinite()) out.value = total;
    return out;
}

// ---------------------------------------------------------------------------
// Changepoint estimator
// ---------------------------------------------------------------------------

struct EstimateResult {
    std::size_t tau_hat = 1;   // in {1..n}
    double objective = 0.0;    // value at the argmax, may be +inf
    double runner_up_gap = 0.0;
};

/// argmax_k of [ |V(k)-(k/n)V(n)| + |~V(n-k)-(k/n)V(n)| ] / D(k), D(k) as
/// in q_statistic. Ties broken by smallest k.
inline EstimateResult changepoint_estimate(const PrefixSums& ps) {
    const std::size_t n = ps.n;
    if (n < 2) throw std::invalid_argument("changepoint_estimate: n >= 2 required");

    EstimateResult out;
    double best = -1.0;
    bool best_inf = false;
    std::size_t inf_count = 0;
    double second_finite = -1.0;
    double best_finite = -1.0;

    const double tol = detail::denom_tolerance(ps);
    for (std::size_t k = 1; k <= n; ++k) {
        const double num = detail::snap_zero(
            std::abs(ps.C[k]) +
                std::abs(ps.tail(n - k) -
                         (static_cast<double>(k) / static_cast<double>(n)) * ps.V[n]),
            tol);
        const double d = detail::q_denominator_direct(ps, k);
        double obj = 0.0;
        bool obj_inf = false;
        if (num == 0.0) {
            obj = 0.0;
        } else if (d == 0.0) {
            obj_inf = true;
        } else {
            obj = num / d;
        }

        if (obj_inf) {
            ++inf_count;
            if (!best_inf) {
                best_inf = true;
                best = detail::kInf;
                out.tau_hat = k;
            }
        } else {
            if (best_finite >= 0.0 && obj <= best_finite) {
                second_finite = std::max(second_finite, obj);
            } else {
                second_finite = best_finite;
                best_finite = obj;
            }
            if (!best_inf && obj > best) {
                best = obj;
                out.tau_hat = k;
            }
        }
    }

    out.objective = best_inf ? detail::kInf : best;
    if (best_inf) {
        out.runner_up_gap = (inf_count == 1) ? detail::kInf : 0.0;
    } else {
        out.runner_up_gap = (second_finite >= 0.0) ? best - second_finite : detail::kInf;
    }
    return out;
}

inline EstimateResult changepoint_estimate(const TimeSeries& series) {
    return changepoint_estimate(cumulative_sums(series));
}

// ---------------------------------------------------------------------------
// Baseline CUSUM with Bartlett long-run variance
// ---------------------------------------------------------------------------

struct BartlettResult {
    double value = 0.0;  // >= 0
    bool clamped = false;
};

/// Bartlett kernel long-run variance estimate with window M, clamped at 0.
inline BartlettResult bartlett_lrv(const TimeSeries& series, std::size_t M) {
    const std::size_t n = series.size();
    if (M < 1 || M >= n) throw std::invalid_argument("bartlett_lrv: require 1 <= M < n");
    const auto y = series.values();
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);

    auto acov = [&](std::size_t k) {
        KahanSum s;
        for (std::size_t i = 1; i + k <= n; ++i)
            s.add((y[i - 1] - mean) * (y[i + k - 1] - mean));
        return s.value() / static_cast<double>(n);
    };

    double sigma2 = acov(0);
    for (std::size_t k = 1; k <= M; ++k)
        sigma2 += 2.0 * (1.0 - static_cast<double>(k) / static_cast<double>(M)) * acov(k);

    BartlettResult out;
    if (sigma2 < 0.0) {
        out.clamped = true;
        out.value = 0.0;
    } else {
        out.value = sigma2;
    }
    return out;
}

// Supremum CUSUM statistic normalized by sqrt(sigma^2 * n), so the null
// limit is the sup of a standard Brownian bridge. Returns nullopt when the
// variance estimate degenerates to 0.
inline std::optional<double> cusum_statistic(const TimeSeries& series, std::size_t M) {
    const auto lrv = bartlett_lrv(series, M);
    if (lrv.value <= 0.0) return std::nullopt;
    const auto ps = cumulative_sums(series);
    double best = 0.0;
    for (std::size_t k = 1; k < ps.n; ++k) best = std::max(best, std::abs(ps.C[k]));
    return best / std::sqrt(lrv.value * static_cast<double>(ps.n));
}

}  // namespace sncp
