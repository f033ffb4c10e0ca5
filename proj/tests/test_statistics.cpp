#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "sncp/statistics.hpp"

using namespace sncp;

namespace {

double rel_err(double a, double b) {
    if (a == b) return 0.0;
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

// fast vs naive on one series: same classification, 1e-10 relative
void check_against_oracle(const std::vector<double>& values) {
    const TimeSeries y(values);
    const auto qd = q_statistic(y, QMethod::Direct);
    const auto qe = q_statistic(y, QMethod::Envelope);
    const auto qn = q_statistic_naive(y);
    const auto r = r_statistic(y);
    const auto rn = r_statistic_naive(y);

    INFO("n = " << values.size());
    CHECK(qd.is_infinite() == qn.is_infinite());
    CHECK(qe.is_infinite() == qn.is_infinite());
    CHECK(qd.degenerate == qn.degenerate);
    CHECK(r.is_infinite() == rn.is_infinite());
    CHECK(r.degenerate == rn.degenerate);
    if (!qn.is_infinite()) {
        CHECK(rel_err(qd.value, qn.value) <= 1e-10);
        CHECK(rel_err(qe.value, qn.value) <= 1e-10);
    }
    if (!rn.is_infinite()) CHECK(rel_err(r.value, rn.value) <= 1e-10);
}

std::vector<double> random_series(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> len(2, 64);
    std::uniform_int_distribution<int> kind(0, 9);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = len(rng);
    std::vector<double> y(n);
    switch (kind(rng)) {
        case 0:  // constant
            std::fill(y.begin(), y.end(), gauss(rng));
            break;
        case 1: {  // two-level step
            const double a = gauss(rng), b = a + gauss(rng);
            std::uniform_int_distribution<int> cut(1, n - 1);
            const int c = cut(rng);
            for (int i = 0; i < n; ++i) y[i] = i < c ? a : b;
            break;
        }
        case 2:  // alternating
            for (int i = 0; i < n; ++i) y[i] = (i % 2) ? 1.0 : -1.0;
            break;
        default:
            for (int i = 0; i < n; ++i) y[i] = gauss(rng);
    }
    return y;
}

}  // namespace

TEST_CASE("hand-checked examples") {
    SECTION("constant series degenerates to 0") {
        const auto q = q_statistic(TimeSeries({5.0, 5.0, 5.0, 5.0}));
        const auto r = r_statistic(TimeSeries({5.0, 5.0, 5.0, 5.0}));
        CHECK(q.value == 0.0);
        CHECK(q.degenerate);
        CHECK(r.value == 0.0);
        CHECK(r.degenerate);
    }
    SECTION("perfect step is infinite") {
        const TimeSeries y({0.0, 0.0, 0.0, 1.0, 1.0, 1.0});
        for (auto m : {QMethod::Direct, QMethod::Envelope}) {
            const auto q = q_statistic(y, m);
            CHECK(q.is_infinite());
            CHECK(q.degenerate);
        }
        const auto r = r_statistic(y);
        CHECK(r.is_infinite());
        CHECK(r.degenerate);
    }
    SECTION("non-constant pair: both single-element conventions fire") {
        const TimeSeries y({0.0, 1.0});
        const auto q = q_statistic(y);
        const auto qn = q_statistic_naive(y);
        CHECK(q.is_infinite());
        CHECK(qn.is_infinite());
        CHECK(r_statistic(y).is_infinite());
    }
    SECTION("small generic series") {
        const TimeSeries y({1.0, 2.0, 0.0, 3.0, 1.0});
        CHECK(q_statistic(y).value == Catch::Approx(0.6));
        CHECK(q_statistic(y, QMethod::Envelope).value == Catch::Approx(0.6));
        CHECK(rel_err(q_statistic(y).value, q_statistic_naive(y).value) <= 1e-10);
        CHECK(rel_err(r_statistic(y).value, r_statistic_naive(y).value) <= 1e-10);
        check_against_oracle({1.0, 2.0, 0.0, 3.0});
    }
}

TEST_CASE("oracle equivalence on 1000 random series") {
    std::mt19937_64 rng(42);
    for (int rep = 0; rep < 1000; ++rep) check_against_oracle(random_series(rng));
}

TEST_CASE("scale, shift, and time-reversal invariance") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::uniform_int_distribution<int> len(2, 80);
        const int n = len(rng);
        std::vector<double> y(n);
        for (auto& v : y) v = gauss(rng);

        const auto q0 = q_statistic(TimeSeries(y));
        const auto r0 = r_statistic(TimeSeries(y));

        for (double c : {-3.0, 0.1, 1e6}) {
            std::vector<double> z = y;
            for (auto& v : z) v *= c;
            const auto q = q_statistic(TimeSeries(z));
            const auto r = r_statistic(TimeSeries(z));
            CHECK(q.is_infinite() == q0.is_infinite());
            CHECK(r.is_infinite() == r0.is_infinite());
            if (!q0.is_infinite()) CHECK(rel_err(q.value, q0.value) <= 1e-9);
            if (!r0.is_infinite()) CHECK(rel_err(r.value, r0.value) <= 1e-9);
        }
        {
            std::vector<double> z = y;
            for (auto& v : z) v += 17.25;
            if (!q0.is_infinite())
                CHECK(rel_err(q_statistic(TimeSeries(z)).value, q0.value) <= 1e-9);
            if (!r0.is_infinite())
                CHECK(rel_err(r_statistic(TimeSeries(z)).value, r0.value) <= 1e-9);
            CHECK(changepoint_estimate(TimeSeries(z)).tau_hat ==
                  changepoint_estimate(TimeSeries(y)).tau_hat);
        }
        {
            std::vector<double> z(y.rbegin(), y.rend());
            const auto q = q_statistic(TimeSeries(z));
            const auto r = r_statistic(TimeSeries(z));
            CHECK(q.is_infinite() == q0.is_infinite());
            CHECK(r.is_infinite() == r0.is_infinite());
            if (!q0.is_infinite()) CHECK(rel_err(q.value, q0.value) <= 1e-9);
            if (!r0.is_infinite()) CHECK(rel_err(r.value, r0.value) <= 1e-9);
        }
    }
}

TEST_CASE("changepoint estimator") {
    SECTION("perfect step") {
        const auto est = changepoint_estimate(TimeSeries({0.0, 0.0, 0.0, 10.0, 10.0, 10.0}));
        CHECK(est.tau_hat == 3);
        CHECK(std::isinf(est.objective));
        CHECK(std::isinf(est.runner_up_gap));
    }
    SECTION("constant series ties break at k=1") {
        const auto est = changepoint_estimate(TimeSeries({2.0, 2.0, 2.0, 2.0}));
        CHECK(est.tau_hat == 1);
        CHECK(est.objective == 0.0);
    }
    SECTION("noisy step lands near the break") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> gauss(0.0, 0.1);
        std::vector<double> y(100);
        for (int i = 0; i < 100; ++i) y[i] = (i < 50 ? 0.0 : 5.0) + gauss(rng);
        const auto est = changepoint_estimate(TimeSeries(y));
        CHECK(est.tau_hat >= 48);
        CHECK(est.tau_hat <= 52);
    }
}

TEST_CASE("Bartlett long-run variance") {
    SECTION("hand value") {
        const auto r = bartlett_lrv(TimeSeries({1.0, -1.0, 1.0, -1.0}), 2);
        CHECK(r.value == Catch::Approx(0.25));
        CHECK_FALSE(r.clamped);
    }
    SECTION("constant series gives 0") {
        const auto r = bartlett_lrv(TimeSeries({3.0, 3.0, 3.0, 3.0}), 2);
        CHECK(r.value == 0.0);
    }
    SECTION("window validation") {
        CHECK_THROWS_AS(bartlett_lrv(TimeSeries({1.0, 2.0}), 0), std::invalid_argument);
        CHECK_THROWS_AS(bartlett_lrv(TimeSeries({1.0, 2.0}), 2), std::invalid_argument);
    }
    SECTION("IID long-run variance near 1") {
        std::mt19937_64 rng(11);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> y(2000);
        for (auto& v : y) v = gauss(rng);
        const auto r = bartlett_lrv(TimeSeries(y), 200);
        CHECK(r.value > 0.8);
        CHECK(r.value < 1.2);
    }
}

TEST_CASE("CUSUM statistic") {
    SECTION("hand value") {
        // y = [1,-1,1,-1]: centered sums [1,0,1,0], sup 1; lrv(M=2) = 0.25
        const auto s = cusum_statistic(TimeSeries({1.0, -1.0, 1.0, -1.0}), 2);
        REQUIRE(s.has_value());
        CHECK(*s == Catch::Approx(1.0));
    }
    SECTION("step series, M=1") {
        // y = [0,0,0,1,1,1]: mean 0.5, centered sums c=[-.5,-1,-1.5,-1,-.5],
        // sup 1.5; M=1 keeps only acov(0) = 0.25; stat = 1.5/sqrt(0.25*6)
        const auto s = cusum_statistic(TimeSeries({0.0, 0.0, 0.0, 1.0, 1.0, 1.0}), 1);
        REQUIRE(s.has_value());
        CHECK(*s == Catch::Approx(1.5 / std::sqrt(0.25 * 6.0)));
    }
    SECTION("constant series degenerates") {
        CHECK_FALSE(cusum_statistic(TimeSeries({2.0, 2.0, 2.0}), 1).has_value());
    }
}

TEST_CASE("naive oracles reject oversized input") {
    CHECK_THROWS_AS(q_statistic_naive(TimeSeries(std::vector<double>(5000, 0.0))),
                    std::invalid_argument);
    CHECK_THROWS_AS(r_statistic_naive(TimeSeries(std::vector<double>(5000, 0.0))),
                    std::invalid_argument);
}
