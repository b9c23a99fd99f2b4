#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpump::csv {

using nlohmann::json;

inline constexpr const char* kSchemaVersion = "1.0";

/// Shortest text that reads back to the same double; NaN and infinities spelled out.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline double parse_number(const std::string& s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("csv: bad number '" + s + "'");
    return v;
}

/// Column-major numeric table with a JSON header line.
struct Table {
    std::string schema;
    json meta = json::object();
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;  // [column][row]

    [[nodiscard]] std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }

    void add_column(const std::string& name, std::vector<double> values) {
        if (!data.empty() && values.size() != rows()) throw std::invalid_argument("csv: column '" + name + "' length mismatch");
        columns.push_back(name);
        data.push_back(std::move(values));
    }

    [[nodiscard]] const std::vector<double>& column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return data[i];
        }
        throw std::out_of_range("csv: no column '" + name + "'");
    }

    [[nodiscard]] std::string header_json() const {
        json h = meta;
        h["schema"] = schema;
        h["schema_version"] = kSchemaVersion;
        h["columns"] = columns;
        return h.dump();
    }
};

inline void write(const std::filesystem::path& path, const Table& t) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("csv: cannot write " + path.string());
    out << "# " << t.header_json() << '\n';
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
    out << '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << format_number(t.data[c][r]);
        out << '\n';
    }
    if (!out) throw std::runtime_error("csv: write failed for " + path.string());
}

inline Table read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("csv: cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw std::runtime_error("csv: missing header line in " + path.string());
    Table t;
    const json h = json::parse(line.substr(2));
    t.schema = h.value("schema", "");
    t.meta = h;
    if (!std::getline(in, line)) throw std::runtime_error("csv: missing column row in " + path.string());
    {
        std::stringstream ss(line);
        std::string name;
        while (std::getline(ss, name, ',')) t.columns.push_back(name);
    }
    t.data.assign(t.columns.size(), {});
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            if (c >= t.columns.size()) throw std::runtime_error("csv: too many fields in " + path.string());
            t.data[c++].push_back(parse_number(cell));
        }
        if (c != t.columns.size()) throw std::runtime_error("csv: too few fields in " + path.string());
    }
    return t;
}

/// Required leading columns of each schema consumed by the plotting side.
/// A "rho_*" entry stands for rho_1 .. rho_n with n >= 1.
inline const std::map<std::string, std::vector<std::string>>& schemas() {
    static const std::map<std::string, std::vector<std::string>> s{
        {"trajectory", {"t", "phi", "x_c", "delta", "rho_*"}},
        {"variational", {"t", "phi", "x_c"}},
        {"dnls", {"z", "delta_x_c"}},
        {"approximant_scan", {"order", "alpha", "L", "chern", "displacement", "ratio"}},
        {"alpha_sweep", {"alpha", "L", "q", "displacement", "displacement_over_alpha"}},
        {"aggregate", {"index", "value", "status"}},
    };
    return s;
}

/// Empty if the table satisfies its schema, otherwise an explanation.
inline std::string check_schema(const Table& t) {
    const auto& all = schemas();
    const auto it = all.find(t.schema);
    if (it == all.end()) return "unknown schema '" + t.schema + "'";
    std::size_t c = 0;
    for (const auto& want : it->second) {
        if (want == "rho_*") {
            std::size_t n = 0;
            while (c < t.columns.size() && t.columns[c] == "rho_" + std::to_string(n + 1)) {
                ++n;
                ++c;
            }
            if (n == 0) return "schema '" + t.schema + "': expected rho_1.. columns at position " + std::to_string(c);
            continue;
        }
        if (c >= t.columns.size() || t.columns[c] != want) {
            return "schema '" + t.schema + "': expected column '" + want + "' at position " + std::to_string(c);
        }
        ++c;
    }
    return {};
}

}  // namespace qpump::csv
