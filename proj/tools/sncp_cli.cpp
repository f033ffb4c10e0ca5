// Command-line front end: test, estimate, crit, generate, experiment.
//
// Exit codes: 0 success, 2 input/config error, 1 null rejected (only with
// --fail-on-reject).

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sncp/bootstrap.hpp"
#include "sncp/dgp.hpp"
#include "sncp/experiments.hpp"
#include "sncp/io.hpp"
#include "sncp/limit_sim.hpp"
#include "sncp/statistics.hpp"

namespace {

using nlohmann::json;
using namespace sncp;

constexpr int kExitOk = 0;
constexpr int kExitReject = 1;
constexpr int kExitError = 2;

void emit(const json& j, const std::string& output_path) {
    const std::string text = j.dump(2) + "\n";
    if (output_path.empty())
        std::cout << text;
    else
        io::write_text_atomic(output_path, text);
}

VarianceProfile resolve_eta(const std::string& eta) {
    if (eta == "linear") return VarianceProfile::constant();
    std::ifstream in(eta);
    if (!in) throw std::runtime_error("cannot open eta profile: " + eta);
    json j;
    in >> j;
    return io::profile_from_json(j);
}

json provenance(const std::string& path, const io::LoadedSeries& loaded) {
    json j;
    j["path"] = path;
    j["n"] = loaded.values.size();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(loaded.checksum));
    j["checksum"] = buf;
    return j;
}

// ---------------------------------------------------------------------------
// test
// ---------------------------------------------------------------------------

struct TestFlags {
    std::string input;
    std::string stat = "r";
    std::string method = "bootstrap";
    std::size_t B = 2000;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    std::string eta = "linear";
    std::size_t M = 0;  // 0 => n/10, min 1
    std::string index_column;
    std::string output;
    std::string table_path;  // precomputed quantile table (asymptotic)
    std::size_t sim_m = 1000;
    std::size_t sim_runs = 20000;
    bool fail_on_reject = false;
};

void add_test_flags(CLI::App* cmd, TestFlags& f, bool with_method) {
    cmd->add_option("--input", f.input, "input CSV (one value column, optional label column)")
        ->required();
    cmd->add_option("--index-column", f.index_column,
                    "label column of a two-column CSV, by header name or 0/1");
    cmd->add_option("--seed", f.seed, "RNG seed");
    cmd->add_option("--output", f.output, "write the JSON report here instead of stdout");
    if (!with_method) return;
    cmd->add_option("--stat", f.stat, "statistic: q, r, or cusum")
        ->check(CLI::IsMember({"q", "r", "cusum"}));
    cmd->add_option("--method", f.method, "bootstrap or asymptotic (q/r only)")
        ->check(CLI::IsMember({"bootstrap", "asymptotic"}));
    cmd->add_option("--B", f.B, "bootstrap replicates");
    cmd->add_option("--alpha", f.alpha, "significance level");
    cmd->add_option("--eta", f.eta,
                    "variance profile for asymptotic critical values: 'linear' "
                    "(eta(t)=t) or a profile JSON file");
    cmd->add_option("--M", f.M, "Bartlett window for cusum (default n/10, min 1)");
    cmd->add_option("--table", f.table_path,
                    "precomputed quantile table JSON (skips the simulation)");
    cmd->add_option("--sim-m", f.sim_m, "grid size for simulated critical values");
    cmd->add_option("--sim-runs", f.sim_runs, "Monte-Carlo runs for simulated critical values");
    cmd->add_flag("--fail-on-reject", f.fail_on_reject, "exit 1 when the null is rejected");
}

QuantileTable table_for(const TestFlags& f, FunctionalKind kind) {
    if (!f.table_path.empty()) {
        std::ifstream in(f.table_path);
        if (!in) throw std::runtime_error("cannot open table: " + f.table_path);
        json j;
        in >> j;
        auto t = io::quantile_table_from_json(j);
        if (t.kind != kind) throw std::runtime_error("quantile table functional mismatch");
        return t;
    }
    const auto profile = resolve_eta(f.eta);
    const std::vector<double> levels = {0.90, 0.95, 0.975, 0.99, 0.995};
    return simulate_quantiles(kind, profile, f.sim_m, f.sim_runs, levels,
                              mix_seed(f.seed, 0xC417ULL));
}

int cmd_test(const TestFlags& f) {
    const auto loaded = io::read_series_csv(
        f.input, f.index_column.empty() ? std::nullopt
                                        : std::optional<std::string>(f.index_column));
    const TimeSeries series(loaded.values);

    json report;
    bool reject = false;

    if (f.stat == "cusum") {
        // Normalization note: the supremum of |partial sums of centered
        // observations| is divided by sqrt(lrv * n), so the null limit is
        // the sup of a standard Brownian bridge and the critical values
        // come from simulating that supremum.
        const std::size_t M = f.M ? f.M : std::max<std::size_t>(1, series.size() / 10);
        const auto stat = cusum_statistic(series, M);
        const auto table = table_for(f, FunctionalKind::SupBridge);
        const double crit = table.quantile_at(1.0 - f.alpha);
        report["schema_version"] = io::kSchemaVersion;
        report["statistic"] = "cusum";
        report["M"] = M;
        if (stat) {
            report["observed"] = *stat;
            reject = *stat > crit;
        } else {
            report["observed"] = nullptr;
            report["note"] = "variance estimate degenerated to 0; no decision";
        }
        report["critical_value"] = crit;
        report["alpha"] = f.alpha;
        report["method"] = "asymptotic";
        report["reject"] = reject;
    } else {
        const StatKind kind = (f.stat == "q") ? StatKind::Q : StatKind::R;
        TestReport tr;
        if (f.method == "bootstrap") {
            BootstrapConfig cfg;
            cfg.B = f.B;
            cfg.seed = f.seed;
            cfg.statistic_kind = kind;
            cfg.alpha = f.alpha;
            tr = run_test(series, cfg);
        } else {
            tr = run_test_asymptotic(series, kind, table_for(f, limit_functional(kind)),
                                     f.alpha);
        }
        report = io::report_to_json(tr);
        reject = tr.reject;
    }

    report["input"] = provenance(f.input, loaded);
    report["version"] = io::kVersion;
    emit(report, f.output);
    return (reject && f.fail_on_reject) ? kExitReject : kExitOk;
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

int cmd_estimate(const TestFlags& f) {
    const auto loaded = io::read_series_csv(
        f.input, f.index_column.empty() ? std::nullopt
                                        : std::optional<std::string>(f.index_column));
    const TimeSeries series(loaded.values);
    const auto est = changepoint_estimate(series);

    json report;
    report["schema_version"] = io::kSchemaVersion;
    report["tau_hat"] = est.tau_hat;
    report["objective"] = io::extended_to_json(est.objective);
    report["runner_up_gap"] = io::extended_to_json(est.runner_up_gap);
    if (!loaded.labels.empty()) report["label"] = loaded.labels[est.tau_hat - 1];
    report["input"] = provenance(f.input, loaded);
    report["version"] = io::kVersion;
    emit(report, f.output);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// crit
// ---------------------------------------------------------------------------

struct CritFlags {
    std::string functional = "s";
    std::string eta = "linear";
    std::size_t m = 1000;
    std::size_t runs = 100000;
    std::string levels = "90,95,97.5,99,99.5";
    std::uint64_t seed = 1;
    std::string output;
    std::string csv;
};

int cmd_crit(const CritFlags& f) {
    FunctionalKind kind;
    if (f.functional == "s")
        kind = FunctionalKind::S;
    else if (f.functional == "t")
        kind = FunctionalKind::T;
    else if (f.functional == "bridge")
        kind = FunctionalKind::SupBridge;
    else
        throw std::runtime_error("unknown functional: " + f.functional);

    std::vector<double> levels;
    std::stringstream ss(f.levels);
    std::string tok;
    while (std::getline(ss, tok, ',')) levels.push_back(std::stod(tok) / 100.0);

    const auto profile = resolve_eta(f.eta);
    const auto table = simulate_quantiles(kind, profile, f.m, f.runs, levels, f.seed);
    emit(io::quantile_table_to_json(table), f.output);
    if (!f.csv.empty()) io::write_text_atomic(f.csv, io::quantile_table_to_csv(table));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateFlags {
    std::string dgp = "iid";
    std::string innovations = "normal";
    std::size_t n = 100;
    double mu = 0.0;
    double delta = 0.0;
    std::int64_t tau = -1;
    std::uint64_t seed = 1;
    std::string output;
};

int cmd_generate(const GenerateFlags& f) {
    DgpSpec spec;
    spec.n = f.n;
    spec.mu = f.mu;
    spec.delta = f.delta;
    if (f.tau >= 0) spec.tau = static_cast<std::size_t>(f.tau);
    spec.errors = io::error_model_from_string(f.dgp);
    spec.innovations = io::innovations_from_string(f.innovations);
    spec.validate();

    const auto series = generate(spec, f.seed);
    const std::string csv = io::series_to_csv(series);
    if (f.output.empty())
        std::cout << csv;
    else
        io::write_text_atomic(f.output, csv);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

struct ExperimentFlags {
    std::string config;  // full JSON config; overrides the inline flags
    std::string cells;   // comma list of cell ids, e.g. iid_null_n400
    std::string methods = "q_bootstrap,r_bootstrap";
    std::size_t reps = 5000;
    std::size_t B = 2000;
    std::uint64_t seed = 1;
    bool desk = false;  // desk-scale preset: reps=1000, B=500
    std::string outdir = ".";
};

// Cell ids follow `<model>_<null|alt>_n<N>[_d<delta>][_t3]` with model in
// {iid, ar1, ar1ar1, arch}; alt cells break at n/2 with delta 1 unless
// overridden, e.g. ar1_alt_n200_d0.5.
Cell parse_cell(const std::string& id) {
    std::vector<std::string> tok;
    std::stringstream ss(id);
    std::string t;
    while (std::getline(ss, t, '_')) tok.push_back(t);
    if (tok.size() < 3) throw std::runtime_error("bad cell id: " + id);

    Cell cell;
    cell.id = id;
    if (tok[0] == "iid")
        cell.spec.errors = ErrorModel::IID;
    else if (tok[0] == "ar1")
        cell.spec.errors = ErrorModel::AR1;
    else if (tok[0] == "ar1ar1")
        cell.spec.errors = ErrorModel::AR1_AR1;
    else if (tok[0] == "arch")
        cell.spec.errors = ErrorModel::ARCH1_INC;
    else
        throw std::runtime_error("bad cell model: " + tok[0]);

    const bool alt = (tok[1] == "alt");
    if (!alt && tok[1] != "null") throw std::runtime_error("bad cell id: " + id);
    if (tok[2].size() < 2 || tok[2][0] != 'n') throw std::runtime_error("bad cell id: " + id);
    cell.spec.n = std::stoul(tok[2].substr(1));

    double delta = 1.0;
    for (std::size_t i = 3; i < tok.size(); ++i) {
        if (tok[i] == "t3")
            cell.spec.innovations = Innovations::StudentT3;
        else if (tok[i].size() > 1 && tok[i][0] == 'd')
            delta = std::stod(tok[i].substr(1));
        else
            throw std::runtime_error("bad cell id token: " + tok[i]);
    }
    if (alt) {
        cell.spec.delta = delta;
        cell.spec.tau = cell.spec.n / 2;
    }
    cell.spec.validate();
    return cell;
}

Method parse_method(const std::string& s) {
    if (s == "q_asymptotic") return Method::QAsymptotic;
    if (s == "r_asymptotic") return Method::RAsymptotic;
    if (s == "q_bootstrap") return Method::QBootstrap;
    if (s == "r_bootstrap") return Method::RBootstrap;
    if (s == "cusum") return Method::CusumM;
    throw std::runtime_error("unknown method: " + s);
}

int cmd_experiment(const ExperimentFlags& f) {
    ExperimentConfig cfg;
    cfg.master_seed = f.seed;
    cfg.repetitions = f.desk ? 1000 : f.reps;
    cfg.B = f.desk ? 500 : f.B;

    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in) throw std::runtime_error("cannot open config: " + f.config);
        json j;
        in >> j;
        for (const auto& c : j.at("cells")) {
            if (c.is_string())
                cfg.cells.push_back(parse_cell(c.get<std::string>()));
            else {
                Cell cell;
                cell.id = c.at("id").get<std::string>();
                cell.spec = io::dgp_from_json(c.at("dgp"));
                cfg.cells.push_back(std::move(cell));
            }
        }
        for (const auto& m : j.at("methods")) cfg.methods.push_back(parse_method(m));
        cfg.repetitions = j.value("repetitions", cfg.repetitions);
        cfg.B = j.value("B", cfg.B);
        cfg.master_seed = j.value("master_seed", cfg.master_seed);
        if (j.contains("alphas")) cfg.alphas = j["alphas"].get<std::vector<double>>();
    } else {
        if (f.cells.empty()) throw std::runtime_error("--cells or --config required");
        std::stringstream ss(f.cells);
        std::string tok;
        while (std::getline(ss, tok, ',')) cfg.cells.push_back(parse_cell(tok));
        std::stringstream ms(f.methods);
        while (std::getline(ms, tok, ',')) cfg.methods.push_back(parse_method(tok));
    }

    // asymptotic/cusum methods need simulated quantile tables
    const std::vector<double> levels = {0.90, 0.95, 0.99};
    const auto linear = VarianceProfile::constant();
    for (Method m : cfg.methods) {
        if (m == Method::QAsymptotic && !cfg.s_table)
            cfg.s_table = simulate_quantiles(FunctionalKind::S, linear, 1000, 20000, levels,
                                             mix_seed(cfg.master_seed, 0x5AULL));
        if (m == Method::RAsymptotic && !cfg.t_table)
            cfg.t_table = simulate_quantiles(FunctionalKind::T, linear, 1000, 20000, levels,
                                             mix_seed(cfg.master_seed, 0x5BULL));
        if (m == Method::CusumM && !cfg.bridge_table)
            cfg.bridge_table = simulate_quantiles(FunctionalKind::SupBridge, linear, 1000,
                                                  20000, levels,
                                                  mix_seed(cfg.master_seed, 0x5CULL));
    }

    const auto table = rejection_rates(cfg);

    // one CSV per (cell, method) plus a JSON summary
    json summary;
    summary["schema_version"] = io::kSchemaVersion;
    summary["repetitions"] = cfg.repetitions;
    summary["B"] = cfg.B;
    summary["master_seed"] = cfg.master_seed;
    summary["entries"] = json::array();
    for (const auto& cell : cfg.cells) {
        for (Method m : cfg.methods) {
            RejectionTable slice;
            for (const auto& e : table.entries)
                if (e.cell == cell.id && e.method == m) slice.entries.push_back(e);
            const std::string path =
                f.outdir + "/" + cell.id + "_" + to_string(m) + ".csv";
            io::write_text_atomic(path, io::rejection_table_to_csv(slice));
            for (const auto& e : slice.entries) {
                json je;
                je["cell"] = e.cell;
                je["method"] = to_string(e.method);
                je["alpha"] = e.alpha;
                je["frequency"] = e.frequency;
                je["std_error"] = e.std_error;
                summary["entries"].push_back(std::move(je));
            }
        }
    }
    io::write_text_atomic(f.outdir + "/summary.json", summary.dump(2) + "\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Changepoint tests for dependent, heteroscedastic series: "
        "self-normalized statistics with wild-bootstrap or simulated "
        "asymptotic critical values."};
    app.require_subcommand(1);

    TestFlags tf;
    auto* test_cmd = app.add_subcommand("test", "run a changepoint test on a CSV series");
    add_test_flags(test_cmd, tf, true);

    TestFlags ef;
    auto* est_cmd = app.add_subcommand("estimate", "changepoint location estimate");
    add_test_flags(est_cmd, ef, false);

    CritFlags cf;
    auto* crit_cmd = app.add_subcommand("crit", "simulate asymptotic critical values");
    crit_cmd->add_option("--functional", cf.functional, "s, t, or bridge")
        ->check(CLI::IsMember({"s", "t", "bridge"}));
    crit_cmd->add_option("--eta", cf.eta, "'linear' or a variance profile JSON file");
    crit_cmd->add_option("--m", cf.m, "grid size");
    crit_cmd->add_option("--runs", cf.runs, "Monte-Carlo runs");
    crit_cmd->add_option("--levels", cf.levels, "comma list of percent levels");
    crit_cmd->add_option("--seed", cf.seed, "RNG seed");
    crit_cmd->add_option("--output", cf.output, "JSON output path (default stdout)");
    crit_cmd->add_option("--csv", cf.csv, "also write a CSV table here");

    GenerateFlags gf;
    auto* gen_cmd = app.add_subcommand("generate", "simulate a series from a DGP");
    gen_cmd->add_option("--dgp", gf.dgp, "iid, ar1, ar1-ar1, or arch1-inc");
    gen_cmd->add_option("--innovations", gf.innovations, "normal or t3");
    gen_cmd->add_option("--n", gf.n, "series length");
    gen_cmd->add_option("--mu", gf.mu, "baseline mean");
    gen_cmd->add_option("--delta", gf.delta, "mean shift after tau");
    gen_cmd->add_option("--tau", gf.tau, "changepoint index (1..n); omit for the null");
    gen_cmd->add_option("--seed", gf.seed, "RNG seed");
    gen_cmd->add_option("--output", gf.output, "CSV output path (default stdout)");

    ExperimentFlags xf;
    auto* exp_cmd = app.add_subcommand("experiment", "rejection-rate study over DGP cells");
    exp_cmd->add_option("--config", xf.config, "JSON experiment config");
    exp_cmd->add_option("--cells", xf.cells,
                        "comma list of cell ids, e.g. iid_null_n400,ar1_alt_n200_d0.5");
    exp_cmd->add_option("--methods", xf.methods,
                        "comma list: q_bootstrap,r_bootstrap,q_asymptotic,r_asymptotic,cusum");
    exp_cmd->add_option("--reps", xf.reps, "repetitions per cell");
    exp_cmd->add_option("--B", xf.B, "bootstrap replicates");
    exp_cmd->add_option("--seed", xf.seed, "master seed");
    exp_cmd->add_flag("--desk", xf.desk, "desk-scale preset: 1000 reps, B=500");
    exp_cmd->add_option("--outdir", xf.outdir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (test_cmd->parsed()) return cmd_test(tf);
        if (est_cmd->parsed()) return cmd_estimate(ef);
        if (crit_cmd->parsed()) return cmd_crit(cf);
        if (gen_cmd->parsed()) return cmd_generate(gf);
        if (exp_cmd->parsed()) return cmd_experiment(xf);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
