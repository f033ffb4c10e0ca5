// Acceptance gate: one PASS/FAIL line per criterion, exit code = number of
// failures. Criterion 7 is skipped with a notice when the user-supplied
// data files are absent.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "sncp/bootstrap.hpp"
#include "sncp/dgp.hpp"
#include "sncp/experiments.hpp"
#include "sncp/io.hpp"
#include "sncp/limit_sim.hpp"
#include "sncp/statistics.hpp"

using namespace sncp;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("C%d %-28s %s  (%.1fs)  %s\n", id, name, pass ? "PASS" : "FAIL", seconds,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

void skip(int id, const char* name, const std::string& why) {
    std::printf("C%d %-28s SKIP  %s\n", id, name, why.c_str());
    std::fflush(stdout);
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

double rel_err(double a, double b) {
    if (a == b) return 0.0;
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

// --- C1: quantiles of the limit functionals, eta(t) = t -------------------

void criterion1() {
    Timer t;
    const std::vector<double> levels = {0.90, 0.95, 0.975, 0.99, 0.995};
    const std::vector<double> s_ref = {1.209008, 1.393566, 1.571462, 1.782524, 1.966223};
    const std::vector<double> t_ref = {5.700222, 7.165705, 8.807070, 10.597625, 11.755233};

    const auto [s_sample, t_sample] =
        simulate_null_sample_both(VarianceProfile::constant(), 1000, 100000, 20250824);
    const auto s_q = quantiles_from_sample(s_sample, levels).quantiles;
    const auto t_q = quantiles_from_sample(t_sample, levels).quantiles;

    bool pass = true;
    int in_band = 0;
    std::string detail;
    char buf[200];
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const bool s_ok = std::abs(s_q[i] - s_ref[i]) <= 0.02;
        const bool t_ok = rel_err(t_q[i], t_ref[i]) <= 0.02;
        in_band += s_ok + t_ok;
        pass = pass && s_ok && t_ok;
        if (!s_ok || !t_ok) {
            std::snprintf(buf, sizeof(buf),
                          "level %.3f: S %.4f (ref %.4f) T %.4f (ref %.4f, %+.2f%%); ",
                          levels[i], s_q[i], s_ref[i], t_q[i], t_ref[i],
                          100.0 * (t_q[i] - t_ref[i]) / t_ref[i]);
            detail += buf;
        }
    }
    if (pass) {
        std::snprintf(buf, sizeof(buf), "S95=%.4f T95=%.4f", s_q[1], t_q[1]);
        detail = buf;
    } else {
        std::snprintf(buf, sizeof(buf), "%d/10 entries in band; see decisions ledger", in_band);
        detail += buf;
    }
    report(1, "limit quantiles", pass, detail, t.elapsed());
}

// --- C2: fast paths vs naive oracles --------------------------------------

std::vector<double> c2_series(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> len(2, 64);
    std::uniform_int_distribution<int> kind(0, 9);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = len(rng);
    std::vector<double> y(n);
    switch (kind(rng)) {
        case 0:
            std::fill(y.begin(), y.end(), gauss(rng));
            break;
        case 1: {
            const double a = gauss(rng), b = a + gauss(rng);
            std::uniform_int_distribution<int> cut(1, n - 1);
            const int c = cut(rng);
            for (int i = 0; i < n; ++i) y[i] = i < c ? a : b;
            break;
        }
        case 2:
            for (int i = 0; i < n; ++i) y[i] = (i % 2) ? 1.0 : -1.0;
            break;
        default:
            for (int i = 0; i < n; ++i) y[i] = gauss(rng);
    }
    return y;
}

void criterion2() {
    Timer t;
    std::mt19937_64 rng(42);
    int bad = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const TimeSeries y(c2_series(rng));
        const auto qd = q_statistic(y, QMethod::Direct);
        const auto qe = q_statistic(y, QMethod::Envelope);
        const auto qn = q_statistic_naive(y);
        const auto r = r_statistic(y);
        const auto rn = r_statistic_naive(y);
        bool ok = qd.is_infinite() == qn.is_infinite() &&
                  qe.is_infinite() == qn.is_infinite() && qd.degenerate == qn.degenerate &&
                  r.is_infinite() == rn.is_infinite() && r.degenerate == rn.degenerate;
        if (ok && !qn.is_infinite())
            ok = rel_err(qd.value, qn.value) <= 1e-10 && rel_err(qe.value, qn.value) <= 1e-10;
        if (ok && !rn.is_infinite()) ok = rel_err(r.value, rn.value) <= 1e-10;
        if (!ok) ++bad;
    }
    report(2, "oracle equivalence", bad == 0,
           bad ? std::to_string(bad) + " of 1000 series mismatched" : "1000 series agree",
           t.elapsed());
}

// --- C3: invariance suite --------------------------------------------------

void criterion3() {
    Timer t;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    int bad = 0;
    for (int rep = 0; rep < 100; ++rep) {
        std::uniform_int_distribution<int> len(2, 80);
        const int n = len(rng);
        std::vector<double> y(n);
        for (auto& v : y) v = gauss(rng);

        const auto q0 = q_statistic(TimeSeries(y));
        const auto r0 = r_statistic(TimeSeries(y));
        auto same = [&](const std::vector<double>& z) {
            const auto q = q_statistic(TimeSeries(z));
            const auto r = r_statistic(TimeSeries(z));
            if (q.is_infinite() != q0.is_infinite() || r.is_infinite() != r0.is_infinite())
                return false;
            if (!q0.is_infinite() && rel_err(q.value, q0.value) > 1e-9) return false;
            if (!r0.is_infinite() && rel_err(r.value, r0.value) > 1e-9) return false;
            return true;
        };

        bool ok = true;
        for (double c : {-3.0, 0.1, 1e6}) {
            auto z = y;
            for (auto& v : z) v *= c;
            ok = ok && same(z);
        }
        {
            auto z = y;
            for (auto& v : z) v += 11.5;
            ok = ok && same(z);
        }
        ok = ok && same(std::vector<double>(y.rbegin(), y.rend()));

        // bootstrap replicate sets: shift exact, scale to tolerance
        BootstrapConfig cfg;
        cfg.B = 8;
        cfg.seed = 1000 + rep;
        const auto base = wild_replicates(TimeSeries(y), cfg);
        auto shifted = y;
        for (auto& v : shifted) v += 3.0;
        auto scaled = y;
        for (auto& v : scaled) v *= -2.0;
        const auto sh = wild_replicates(TimeSeries(shifted), cfg);
        const auto sc = wild_replicates(TimeSeries(scaled), cfg);
        for (std::size_t b = 0; b < cfg.B; ++b) {
            if (rel_err(sh.replicates[b], base.replicates[b]) > 1e-9) ok = false;
            if (rel_err(sc.replicates[b], base.replicates[b]) > 1e-9) ok = false;
        }
        if (!ok) ++bad;
    }
    report(3, "invariance suite", bad == 0,
           bad ? std::to_string(bad) + " of 100 series violated an invariance"
               : "scale/shift/reversal hold",
           t.elapsed());
}

// --- C4/C5: bootstrap size and power at n = 400 ---------------------------

void criterion4_5() {
    ExperimentConfig cfg;
    {
        DgpSpec null_spec;
        null_spec.n = 400;
        cfg.cells.push_back({"iid_null_n400", null_spec});
        DgpSpec alt_spec = null_spec;
        alt_spec.delta = 1.0;
        alt_spec.tau = 200;
        cfg.cells.push_back({"iid_alt_n400", alt_spec});
    }
    cfg.methods = {Method::QBootstrap, Method::RBootstrap};
    cfg.repetitions = 1000;
    cfg.B = 500;
    cfg.alphas = {0.05};
    cfg.master_seed = 20250824;

    Timer t4;
    const auto table = rejection_rates(cfg);
    const double q_size = table.find("iid_null_n400", Method::QBootstrap, 0.05).frequency;
    const double r_size = table.find("iid_null_n400", Method::RBootstrap, 0.05).frequency;
    const bool pass4 = r_size >= 0.035 && r_size <= 0.065 && q_size >= 0.03 && q_size <= 0.07;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "Q size %.3f (band [0.03,0.07]), R size %.3f (band [0.035,0.065])",
                  q_size, r_size);
    report(4, "bootstrap size", pass4, buf, t4.elapsed());

    Timer t5;
    const double q_power = table.find("iid_alt_n400", Method::QBootstrap, 0.05).frequency;

    Cell alt_cell = cfg.cells[1];
    auto taus = estimator_distribution(alt_cell, 500, cfg.master_seed + 1);
    std::vector<double> dev(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) dev[i] = std::abs(taus[i] - 0.5);
    std::sort(dev.begin(), dev.end());
    const double med = dev[dev.size() / 2];
    const double p90 = dev[static_cast<std::size_t>(0.9 * dev.size())];

    const bool pass5 = q_power >= 0.90 && med <= 0.02 && p90 <= 0.05;
    std::snprintf(buf, sizeof(buf),
                  "Q power %.3f (>=0.90), |tau/n-1/2| median %.4f (<=0.02) p90 %.4f (<=0.05)",
                  q_power, med, p90);
    report(5, "power and consistency", pass5, buf, t5.elapsed());
}

// --- C6: extreme heteroscedasticity ---------------------------------------

void criterion6() {
    Timer t;
    ExtremeScenarioConfig cfg;
    cfg.seed = 20250824;
    const auto res = extreme_hetero_scenario(cfg);

    const bool boot_ok = res.q_boot_size >= 0.02 && res.q_boot_size <= 0.09 &&
                         res.r_boot_size >= 0.02 && res.r_boot_size <= 0.09;
    const bool misspec_off = (res.q_asym_linear_size < 0.03 || res.q_asym_linear_size > 0.07) &&
                             (res.r_asym_linear_size < 0.03 || res.r_asym_linear_size > 0.07);
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "boot size Q %.3f R %.3f (band [0.02,0.09]); misspecified asym size Q %.3f "
                  "R %.3f (must leave [0.03,0.07])",
                  res.q_boot_size, res.r_boot_size, res.q_asym_linear_size,
                  res.r_asym_linear_size);
    report(6, "heteroscedastic robustness", boot_ok && misspec_off, buf, t.elapsed());
}

// --- C7: real-data checks (conditional) -----------------------------------

std::string find_data(const char* env, const char* fallback) {
    if (const char* p = std::getenv(env)) return p;
    std::ifstream probe(fallback);
    return probe ? fallback : std::string();
}

void criterion7() {
    const std::string vw = find_data("SNCP_VW_CSV", "data/vw.csv");
    const std::string elbe = find_data("SNCP_ELBE_CSV", "data/elbe.csv");
    if (vw.empty() && elbe.empty()) {
        skip(7, "real-data determinism",
             "user-supplied data absent (set SNCP_VW_CSV / SNCP_ELBE_CSV or place "
             "data/vw.csv, data/elbe.csv)");
        return;
    }
    Timer t;
    bool pass = true;
    std::string detail;
    char buf[200];

    auto check_series = [&](const std::string& path, double q_ref, double r_ref,
                            double q_crit_ref, double r_crit_ref, int tau_ref) {
        const auto loaded = io::read_series_csv(path);
        const TimeSeries y(loaded.values);
        const double q = q_statistic(y, QMethod::Envelope).value;
        const double r = r_statistic(y).value;
        const auto est = changepoint_estimate(y);

        BootstrapConfig bc;
        bc.B = 2000;
        bc.seed = 1;
        bc.statistic_kind = StatKind::Q;
        const double qc = critical_value(wild_replicates(y, bc), 0.05);
        bc.statistic_kind = StatKind::R;
        const double rc = critical_value(wild_replicates(y, bc), 0.05);

        bool ok = std::abs(q - q_ref) <= 5e-7 && std::abs(r - r_ref) <= 5e-6 &&
                  std::abs(qc - q_crit_ref) <= 0.05 && std::abs(rc - r_crit_ref) <= 0.5;
        if (tau_ref > 0) ok = ok && est.tau_hat == static_cast<std::size_t>(tau_ref);
        std::snprintf(buf, sizeof(buf), "%s: Q %.6f R %.5f tau %zu Qcrit %.4f Rcrit %.4f; ",
                      path.c_str(), q, r, est.tau_hat, qc, rc);
        detail += buf;
        pass = pass && ok;
    };

    if (!vw.empty()) check_series(vw, 1.546779, 10.74026, 1.388683, 8.109334, 182);
    if (!elbe.empty()) check_series(elbe, 1.481084, 7.936363, 1.476675, 7.599609, -1);
    report(7, "real-data determinism", pass, detail, t.elapsed());
}

// --- C8: fixed-alternative bootstrap vs the simulated limit ---------------

void criterion8() {
    Timer t;
    const std::vector<double> levels = {0.50, 0.95};
    const auto limit = simulate_alternative_limit(FunctionalKind::S,
                                                  VarianceProfile::constant(), 5.0, 0.5,
                                                  1000, 20000, levels, 77);

    // average the bootstrap replicate quantiles over a few outer series
    double q50 = 0.0, q95 = 0.0;
    const int outer = 5;
    for (int s = 0; s < outer; ++s) {
        DgpSpec spec;
        spec.n = 2000;
        spec.delta = 5.0;
        spec.tau = 1000;
        const auto series = generate(spec, 900 + s);
        BootstrapConfig bc;
        bc.B = 2000;
        bc.seed = 40 + s;
        bc.statistic_kind = StatKind::Q;
        const auto dist = wild_replicates(series, bc);
        q50 += critical_value(dist, 0.50);
        q95 += critical_value(dist, 0.05);
    }
    q50 /= outer;
    q95 /= outer;

    const double l50 = limit.quantiles[0], l95 = limit.quantiles[1];
    const bool pass = rel_err(q50, l50) <= 0.10 && rel_err(q95, l95) <= 0.10;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "bootstrap 50%%/95%%: %.4f/%.4f vs limit %.4f/%.4f (tol 10%%)", q50, q95,
                  l50, l95);
    report(8, "alternative-limit match", pass, buf, t.elapsed());
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4_5();
    criterion6();
    criterion7();
    criterion8();
    std::printf("%s (%d failure%s)\n", failures ? "ACCEPTANCE FAIL" : "ACCEPTANCE PASS",
                failures, failures == 1 ? "" : "s");
    return failures;
}
