#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "sncp/limit_sim.hpp"
#include "sncp/rng.hpp"
#include "sncp/series.hpp"

namespace sncp {

enum class ErrorModel { IID, AR1, AR1_AR1, ARCH1_INC };
enum class Innovations { Normal, StudentT3 };

inline const char* to_string(ErrorModel m) {
    switch (m) {
        case ErrorModel::IID: return "iid";
        case ErrorModel::AR1: return "ar1";
        case ErrorModel::AR1_AR1: return "ar1-ar1";
        case ErrorModel::ARCH1_INC: return "arch1-inc";
    }
    return "?";
}

inline const char* to_string(Innovations i) {
    return i == Innovations::Normal ? "normal" : "t3";
}

// Simulation-study data generator: Y_k = mu + delta 1{k > tau} + e_k with
// the four error models. Every model is standardized to unit variance at
// the start of the series; the non-stationary ones double the variance.
struct DgpSpec {
    std::size_t n = 100;
    double mu = 0.0;
    double delta = 0.0;
    std::optional<std::size_t> tau;  // absent => null hypothesis (tau = n)
    ErrorModel errors = ErrorModel::IID;
    Innovations innovations = Innovations::Normal;

    void validate() const {
        if (n < 2) throw std::invalid_argument("DgpSpec: n >= 2 required");
        if (tau && (*tau < 1 || *tau > n))
            throw std::invalid_argument("DgpSpec: tau in {1..n} required");
    }
};

namespace detail {

constexpr double kAr1Phi = 0.3;
constexpr double kArchAlpha1 = 0.9;
constexpr double kArchOmega = 1.0 - kArchAlpha1;  // unit stationary variance
constexpr std::size_t kBurnIn = 1000;

// unit-variance innovation draw; t3 is rescaled by 1/sqrt(3)
template <typename Rng>
double draw_innovation(Rng& rng, Innovations law, std::normal_distribution<double>& normal,
                       std::student_t_distribution<double>& t3) {
    if (law == Innovations::Normal) return normal(rng);
    return t3(rng) / std::sqrt(3.0);
}

}  // namespace detail

/// Error path with unit marginal variance (before any volatility scaling).
inline std::vector<double> generate_errors(const DgpSpec& spec, std::uint64_t seed) {
    spec.validate();
    auto rng = stream_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::student_t_distribution<double> t3(3.0);
    auto draw = [&] { return detail::draw_innovation(rng, spec.innovations, normal, t3); };

    const std::size_t n = spec.n;
    std::vector<double> e(n);

    switch (spec.errors) {
        case ErrorModel::IID:
            for (std::size_t k = 0; k < n; ++k) e[k] = draw();
            break;
        case ErrorModel::AR1:
        case ErrorModel::AR1_AR1: {
            const double phi = detail::kAr1Phi;
            const double scale = std::sqrt(1.0 - phi * phi);
            double prev;
            if (spec.innovations == Innovations::Normal) {
                prev = normal(rng);  // exact stationary start, var 1
            } else {
                prev = 0.0;
                for (std::size_t b = 0; b < detail::kBurnIn; ++b)
                    prev = phi * prev + scale * draw();
            }
            for (std::size_t k = 0; k < n; ++k) {
                prev = phi * prev + scale * draw();
                e[k] = prev;
            }
            if (spec.errors == ErrorModel::AR1_AR1) {
                const std::size_t quarter = n / 4;
                for (std::size_t k = quarter; k < n; ++k) e[k] *= std::sqrt(2.0);
            }
            break;
        }
        case ErrorModel::ARCH1_INC: {
            std::uniform_real_distribution<double> uniform(0.0, 1.0);
            double prev = 0.0;
            for (std::size_t b = 0; b < detail::kBurnIn; ++b)
                prev = draw() * std::sqrt(detail::kArchOmega +
                                          detail::kArchAlpha1 * prev * prev);
            for (std::size_t k = 0; k < n; ++k) {
                prev = draw() * std::sqrt(detail::kArchOmega +
                                          detail::kArchAlpha1 * prev * prev);
                // random, in-mean linearly increasing volatility multiplier:
                // m_k^2 = 1 + U_k * 2(k-1)/(n-1), unit at k=1, mean 2 at k=n
                const double u = uniform(rng);
                const double m2 = 1.0 + u * 2.0 * static_cast<double>(k) /
                                            static_cast<double>(n - 1);
                e[k] = prev * std::sqrt(m2);
            }
            break;
        }
    }
    return e;
}

inline TimeSeries generate(const DgpSpec& spec, std::uint64_t seed) {
    auto values = generate_errors(spec, seed);
    const std::size_t tau = spec.tau.value_or(spec.n);
    for (std::size_t k = 0; k < spec.n; ++k) {
        values[k] += spec.mu;
        if (k + 1 > tau) values[k] += spec.delta;
    }
    return TimeSeries(std::move(values));
}

/// The exact eta implied by the deterministic volatility envelope.
/// ARCH1_INC has a stochastic envelope and therefore no deterministic eta.
inline VarianceProfile theoretical_eta(const DgpSpec& spec) {
    switch (spec.errors) {
        case ErrorModel::IID:
        case ErrorModel::AR1:
            return VarianceProfile::constant();
        case ErrorModel::AR1_AR1:
            // sigma^2 = 1 on [0,1/4), 2 on [1/4,1]
            return VarianceProfile::piecewise_constant({0.25}, {1.0, 2.0}, "ar1-ar1");
        case ErrorModel::ARCH1_INC:
            throw std::invalid_argument(
                "theoretical_eta: ARCH1_INC has a stochastic volatility envelope");
    }
    throw std::invalid_argument("theoretical_eta: unknown error model");
}

}  // namespace sncp
