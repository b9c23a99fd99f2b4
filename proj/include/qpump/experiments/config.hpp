#pragma once

#include <json.hpp>

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpump::config {

using nlohmann::json;

class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& what)
        : std::runtime_error("config line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::string strip_comment(const std::string& s) {
    char quote = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (quote) {
            if (c == '\\' && quote == '"') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#') {
            return s.substr(0, i);
        }
    }
    return s;
}

inline std::vector<std::string> split_key(const std::string& key, int line) {
    std::vector<std::string> parts;
    std::stringstream ss(key);
    std::string p;
    while (std::getline(ss, p, '.')) {
        p = trim(p);
        if (p.empty()) throw ParseError(line, "empty key segment in '" + key + "'");
        for (char c : p) {
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) {
                throw ParseError(line, "invalid character in key '" + key + "'");
            }
        }
        parts.push_back(p);
    }
    if (parts.empty()) throw ParseError(line, "missing key");
    return parts;
}

inline json parse_scalar(const std::string& raw, int line) {
    const std::string v = trim(raw);
    if (v.empty()) throw ParseError(line, "missing value");
    if (v.front() == '"' || v.front() == '\'') {
        const char q = v.front();
        if (v.size() < 2 || v.back() != q) throw ParseError(line, "unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            if (q == '"' && v[i] == '\\' && i + 2 < v.size()) {
                const char e = v[++i];
                out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
            } else {
                out += v[i];
            }
        }
        return out;
    }
    if (v == "true") return true;
    if (v == "false") return false;
    std::string num;
    for (char c : v) {
        if (c != '_') num += c;
    }
    long long iv = 0;
    auto [pi, ei] = std::from_chars(num.data(), num.data() + num.size(), iv);
    if (ei == std::errc() && pi == num.data() + num.size()) return iv;
    double dv = 0.0;
    auto [pd, ed] = std::from_chars(num.data(), num.data() + num.size(), dv);
    if (ed == std::errc() && pd == num.data() + num.size()) return dv;
    if (num == "inf" || num == "+inf") return std::numeric_limits<double>::infinity();
    throw ParseError(line, "cannot parse value '" + v + "'");
}

inline std::vector<std::string> split_array(const std::string& body, int line) {
    std::vector<std::string> items;
    std::string cur;
    char quote = 0;
    for (char c : body) {
        if (quote) {
            cur += c;
            if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
            cur += c;
        } else if (c == ',') {
            items.push_back(cur);
            cur.clear();
        } else if (c == '[' || c == ']') {
            throw ParseError(line, "nested arrays are not supported");
        } else {
            cur += c;
        }
    }
    if (quote) throw ParseError(line, "unterminated string in array");
    if (!trim(cur).empty()) items.push_back(cur);
    return items;
}

inline json parse_value(const std::string& raw, int line) {
    const std::string v = trim(raw);
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']') throw ParseError(line, "arrays must close on the same line");
        json arr = json::array();
        for (const auto& item : split_array(v.substr(1, v.size() - 2), line)) {
            if (trim(item).empty()) throw ParseError(line, "empty array element");
            arr.push_back(parse_scalar(item, line));
        }
        return arr;
    }
    return parse_scalar(v, line);
}

inline json& descend(json& root, const std::vector<std::string>& path, int line) {
    json* node = &root;
    for (const auto& p : path) {
        if (!node->is_object()) throw ParseError(line, "key '" + p + "' nested under a non-table value");
        node = &(*node)[p];
        if (node->is_null()) *node = json::object();
    }
    if (!node->is_object()) throw ParseError(line, "table redefines a value");
    return *node;
}

}  // namespace detail

/// Parse the TOML subset used by run configs: [tables], dotted keys, strings,
/// integers, floats, booleans and single-line arrays of scalars.
inline json parse_toml(const std::string& text) {
    json root = json::object();
    std::vector<std::string> table;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = detail::trim(detail::strip_comment(raw));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3) throw ParseError(line, "malformed table header");
            table = detail::split_key(s.substr(1, s.size() - 2), line);
            detail::descend(root, table, line);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(line, "expected key = value");
        auto key = detail::split_key(s.substr(0, eq), line);
        std::vector<std::string> parent = table;
        parent.insert(parent.end(), key.begin(), key.end() - 1);
        json& node = detail::descend(root, parent, line);
        if (node.contains(key.back())) throw ParseError(line, "duplicate key '" + key.back() + "'");
        node[key.back()] = detail::parse_value(s.substr(eq + 1), line);
    }
    return root;
}

inline json load_toml(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_toml(ss.str());
}

/// Apply "a.b.c=value"; the value is read as a config literal, or kept as a bare string.
inline void apply_override(json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("override '" + assignment + "' is not key=value");
    const auto path = detail::split_key(assignment.substr(0, eq), 0);
    const std::string raw = detail::trim(assignment.substr(eq + 1));
    json value;
    try {
        value = detail::parse_value(raw, 0);
    } catch (const ParseError&) {
        value = raw;
    }
    std::vector<std::string> parent(path.begin(), path.end() - 1);
    json& node = detail::descend(root, parent, 0);
    node[path.back()] = std::move(value);
}

/// Recursive merge: tables merge key-wise, everything else is replaced.
inline void merge(json& base, const json& patch) {
    if (!patch.is_object() || !base.is_object()) {
        base = patch;
        return;
    }
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object()) {
            merge(base[it.key()], it.value());
        } else {
            base[it.key()] = it.value();
        }
    }
}

/// Keys present in `given` but absent from `schema` (dotted paths).
inline std::vector<std::string> unknown_keys(const json& given, const json& schema, const std::string& prefix = "") {
    std::vector<std::string> out;
    if (!given.is_object()) return out;
    for (auto it = given.begin(); it != given.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!schema.is_object() || !schema.contains(it.key())) {
            out.push_back(path);
        } else if (it.value().is_object()) {
            auto sub = unknown_keys(it.value(), schema.at(it.key()), path);
            out.insert(out.end(), sub.begin(), sub.end());
        }
    }
    return out;
}

}  // namespace qpump::config
