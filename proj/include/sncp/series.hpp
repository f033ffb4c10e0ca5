#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace sncp {

// Compensated (Kahan) accumulator. The bootstrap evaluates the same
// statistic on thousands of perturbed series; plain summation makes the
// fast and naive paths drift apart at the tolerance we test against.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        double y = x - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

/// Ordered finite observations Y_1..Y_n, n >= 2, all entries finite.
class TimeSeries {
public:
    explicit TimeSeries(std::vector<double> values) : values_(std::move(values)) {
        if (values_.size() < 2)
            throw std::invalid_argument("TimeSeries requires at least 2 observations");
        for (double v : values_)
            if (!std::isfinite(v))
                throw std::invalid_argument("TimeSeries entries must be finite");
    }

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const { return values_; }

private:
    std::vector<double> values_;
};

// Cumulative sums V(k) = sum_{i<=k} Y_i with a V(0)=0 sentinel, the
// centered sums C(k) = sum_{i<=k} (Y_i - mean), and the prefix moments
// needed to expand the integral-type denominator in O(1) per k:
//   SV1(k) = sum_{i<=k} V(i),   SV2(k) = sum_{i<=k} V(i)^2,
//   SiV(k) = sum_{i<=k} i*V(i), Si1(k) = sum_{i<=k} i, Si2(k) = sum_{i<=k} i^2.
//
// C is accumulated from the residuals Y_i - mean rather than derived as
// V(k) - (k/n)V(n): the residual form produces exact zeros for constant
// series, which the degeneracy conventions rely on.
struct PrefixSums {
    std::size_t n = 0;
    std::vector<double> Y;    // size n, the original observations
    std::vector<double> V;    // size n+1
    std::vector<double> C;    // size n+1, centered partial sums
    std::vector<double> SV1;  // size n+1
    std::vector<double> SV2;  // size n+1
    std::vector<double> SiV;  // size n+1
    std::vector<double> Si1;  // size n+1
    std::vector<double> Si2;  // size n+1
    double mean = 0.0;
    double max_abs_V = 0.0;

    double total() const { return V[n]; }
    /// V(n) - V(k)
    double tail(std::size_t k) const { return V[n] - V[k]; }
};

inline PrefixSums cumulative_sums(const TimeSeries& series) {
    const std::size_t n = series.size();
    PrefixSums ps;
    ps.n = n;
    ps.Y.assign(series.values().begin(), series.values().end());
    ps.V.resize(n + 1);
    ps.C.resize(n + 1);
    ps.SV1.resize(n + 1);
    ps.SV2.resize(n + 1);
    ps.SiV.resize(n + 1);
    ps.Si1.resize(n + 1);
    ps.Si2.resize(n + 1);

    KahanSum v;
    ps.V[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        v.add(series[i - 1]);
        ps.V[i] = v.value();
        ps.max_abs_V = std::max(ps.max_abs_V, std::abs(ps.V[i]));
    }
    ps.mean = ps.V[n] / static_cast<double>(n);

    KahanSum c, sv1, sv2, siv;
    ps.C[0] = ps.SV1[0] = ps.SV2[0] = ps.SiV[0] = ps.Si1[0] = ps.Si2[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        c.add(series[i - 1] - ps.mean);
        ps.C[i] = c.value();
        const double vi = ps.V[i];
        const double di = static_cast<double>(i);
        sv1.add(vi);
        sv2.add(vi * vi);
        siv.add(di * vi);
        ps.SV1[i] = sv1.value();
        ps.SV2[i] = sv2.value();
        ps.SiV[i] = siv.value();
        ps.Si1[i] = ps.Si1[i - 1] + di;
        ps.Si2[i] = ps.Si2[i - 1] + di * di;
    }
    return ps;
}

/// Mean of Y_i..Y_j (1-based, inclusive) as (V(j) - V(i-1)) / (j-i+1).
inline double segment_mean(const PrefixSums& ps, std::size_t i, std::size_t j) {
    if (i < 1 || j < i || j > ps.n)
        throw std::out_of_range("segment_mean: require 1 <= i <= j <= n");
    return (ps.V[j] - ps.V[i - 1]) / static_cast<double>(j - i + 1);
}

inline double segment_mean(const TimeSeries& series, std::size_t i, std::size_t j) {
    return segment_mean(cumulative_sums(series), i, j);
}

}  // namespace sncp
