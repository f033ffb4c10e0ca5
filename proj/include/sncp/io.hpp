#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sncp/bootstrap.hpp"
#include "sncp/dgp.hpp"
#include "sncp/experiments.hpp"
#include "sncp/limit_sim.hpp"

namespace sncp::io {

using nlohmann::json;

constexpr int kSchemaVersion = 1;
constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

struct LoadedSeries {
    std::vector<double> values;
    std::vector<std::string> labels;  // empty when no label column
    std::vector<std::string> header;  // empty when no header row
    std::uint64_t checksum = 0;       // FNV-1a of the raw file bytes
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim whitespace and a trailing CR
        std::size_t b = field.find_first_not_of(" \t\r");
        std::size_t e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

inline std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace detail

// Accepts a single numeric column, or two columns where one carries
// date/label text. `index_column` selects the label column by header name
// or 0-based index; without it, a two-column file is read as label,value.
inline LoadedSeries read_series_csv(const std::string& path,
                                    const std::optional<std::string>& index_column = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string content = buffer.str();

    LoadedSeries out;
    out.checksum = hash_string(content);

    std::vector<std::vector<std::string>> rows;
    {
        std::stringstream ss(content);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(ss, line)) {
            ++line_no;
            if (line.empty() || line == "\r") continue;
            auto fields = detail::split_csv_line(line);
            if (fields.size() > 2)
                throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                         ": expected at most 2 columns, got " +
                                         std::to_string(fields.size()));
            rows.push_back(std::move(fields));
        }
    }
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");

    const std::size_t ncols = rows[0].size();
    std::size_t first_data = 0;

    // header row: any column of the first row that fails to parse while a
    // later row exists
    bool first_numeric = true;
    for (const auto& f : rows[0])
        if (!detail::parse_double(f)) first_numeric = false;
    if (!first_numeric) {
        out.header = rows[0];
        first_data = 1;
        if (rows.size() < 2) throw std::runtime_error(path + ": header but no data rows");
    }

    std::size_t label_col = ncols;  // ncols == "none"
    std::size_t value_col = 0;
    if (ncols == 2) {
        if (index_column) {
            if (*index_column == "0" || *index_column == "1") {
                label_col = static_cast<std::size_t>(std::stoul(*index_column));
            } else if (!out.header.empty()) {
                if (out.header[0] == *index_column)
                    label_col = 0;
                else if (out.header[1] == *index_column)
                    label_col = 1;
                else
                    throw std::runtime_error(path + ": no column named '" + *index_column + "'");
            } else {
                throw std::runtime_error(path + ": --index-column needs a header or 0/1");
            }
        } else {
            label_col = 0;
        }
        value_col = 1 - label_col;
    }

    for (std::size_t r = first_data; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != ncols)
            throw std::runtime_error(path + ": line " + std::to_string(r + 1) +
                                     ": inconsistent column count");
        const auto v = detail::parse_double(row[value_col]);
        if (!v || !std::isfinite(*v))
            throw std::runtime_error(path + ": line " + std::to_string(r + 1) +
                                     ": non-numeric or non-finite value '" + row[value_col] +
                                     "'");
        out.values.push_back(*v);
        if (label_col < ncols) out.labels.push_back(row[label_col]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Atomic writes
// ---------------------------------------------------------------------------

inline void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// JSON / CSV serialization
// ---------------------------------------------------------------------------

inline json extended_to_json(double value) {
    if (std::isinf(value)) return "inf";
    return value;
}

inline json report_to_json(const TestReport& r) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["statistic"] = to_string(r.statistic_kind);
    j["observed"] = extended_to_json(r.observed);
    j["observed_degenerate"] = r.observed_degenerate;
    j["method"] = to_string(r.method);
    j["critical_value"] = extended_to_json(r.critical_value);
    j["p_value"] = r.p_value;
    j["reject"] = r.reject;
    j["alpha"] = r.alpha;
    if (r.tau_hat) j["tau_hat"] = *r.tau_hat;
    j["seed"] = r.seed;
    if (r.B) j["B"] = r.B;
    return j;
}

inline json quantile_table_to_json(const QuantileTable& t) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["functional"] = to_string(t.kind);
    j["profile"] = t.profile_id;
    j["levels"] = t.levels;
    j["quantiles"] = t.quantiles;
    j["mc_stderrs"] = t.stderrs;
    j["m"] = t.m;
    j["runs"] = t.runs;
    j["seed"] = t.seed;
    return j;
}

inline std::string quantile_table_to_csv(const QuantileTable& t) {
    std::ostringstream out;
    out << "level,quantile,mc_stderr\n";
    out.precision(10);
    for (std::size_t i = 0; i < t.levels.size(); ++i)
        out << t.levels[i] << ',' << t.quantiles[i] << ',' << t.stderrs[i] << '\n';
    return out.str();
}

inline json dgp_to_json(const DgpSpec& s) {
    json j;
    j["n"] = s.n;
    j["mu"] = s.mu;
    j["delta"] = s.delta;
    if (s.tau) j["tau"] = *s.tau;
    j["errors"] = to_string(s.errors);
    j["innovations"] = to_string(s.innovations);
    return j;
}

inline ErrorModel error_model_from_string(const std::string& s) {
    if (s == "iid") return ErrorModel::IID;
    if (s == "ar1") return ErrorModel::AR1;
    if (s == "ar1-ar1") return ErrorModel::AR1_AR1;
    if (s == "arch1-inc") return ErrorModel::ARCH1_INC;
    throw std::runtime_error("unknown error model: " + s);
}

inline Innovations innovations_from_string(const std::string& s) {
    if (s == "normal") return Innovations::Normal;
    if (s == "t3") return Innovations::StudentT3;
    throw std::runtime_error("unknown innovation law: " + s);
}

inline DgpSpec dgp_from_json(const json& j) {
    DgpSpec s;
    s.n = j.at("n").get<std::size_t>();
    s.mu = j.value("mu", 0.0);
    s.delta = j.value("delta", 0.0);
    if (j.contains("tau") && !j["tau"].is_null()) s.tau = j["tau"].get<std::size_t>();
    s.errors = error_model_from_string(j.value("errors", "iid"));
    s.innovations = innovations_from_string(j.value("innovations", "normal"));
    s.validate();
    return s;
}

inline VarianceProfile profile_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "constant")
        return VarianceProfile::constant(j.value("sigma2", 1.0));
    if (type == "piecewise_constant")
        return VarianceProfile::piecewise_constant(j.at("breaks").get<std::vector<double>>(),
                                                   j.at("values").get<std::vector<double>>());
    if (type == "piecewise_linear")
        return VarianceProfile::piecewise_linear(j.at("knots").get<std::vector<double>>(),
                                                 j.at("values").get<std::vector<double>>());
    throw std::runtime_error("unknown variance profile type: " + type);
}

inline std::string series_to_csv(const TimeSeries& series) {
    std::ostringstream out;
    out.precision(17);
    for (double v : series.values()) out << v << '\n';
    return out.str();
}

inline std::string rejection_table_to_csv(const RejectionTable& t) {
    std::ostringstream out;
    out << "cell,method,alpha,frequency,std_error,repetitions,degenerate\n";
    out.precision(10);
    for (const auto& e : t.entries)
        out << e.cell << ',' << to_string(e.method) << ',' << e.alpha << ',' << e.frequency
            << ',' << e.std_error << ',' << e.repetitions << ',' << e.degenerate << '\n';
    return out.str();
}

inline std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
    std::ostringstream out;
    out << "threshold,size,power\n";
    out.precision(10);
    for (const auto& p : curve)
        out << p.threshold << ',' << p.size << ',' << p.power << '\n';
    return out.str();
}

inline QuantileTable quantile_table_from_json(const json& j) {
    QuantileTable t;
    const std::string kind = j.at("functional").get<std::string>();
    if (kind == "S")
        t.kind = FunctionalKind::S;
    else if (kind == "T")
        t.kind = FunctionalKind::T;
    else if (kind == "sup_bridge")
        t.kind = FunctionalKind::SupBridge;
    else
        throw std::runtime_error("unknown functional kind: " + kind);
    t.profile_id = j.value("profile", "");
    t.levels = j.at("levels").get<std::vector<double>>();
    t.quantiles = j.at("quantiles").get<std::vector<double>>();
    t.stderrs = j.value("mc_stderrs", std::vector<double>(t.levels.size(), 0.0));
    t.m = j.value("m", std::size_t{0});
    t.runs = j.value("runs", std::size_t{0});
    t.seed = j.value("seed", std::uint64_t{0});
    return t;
}

}  // namespace sncp::io
