#pragma once

// Minimal TOML subset reader: [dotted.section] headers, key = value pairs
// with string / integer / float / boolean / flat-array values, and #
// comments. Covers experiment config files; not a general TOML parser
// (no inline tables, no arrays of tables, no multi-line strings).

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mcdiag/common.hpp"

namespace mcdiag::toml {

using Value = std::variant<std::string, std::int64_t, double, bool,
                           std::vector<std::int64_t>, std::vector<double>,
                           std::vector<std::string>>;

class Table {
public:
    void set(const std::string& key, Value v) { entries_[key] = std::move(v); }

    bool contains(const std::string& key) const { return entries_.count(key) > 0; }

    template <typename T>
    T get(const std::string& key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw ConfigError("missing config key: " + key);
        return coerce<T>(it->second, key);
    }

    template <typename T>
    T get_or(const std::string& key, T fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        return coerce<T>(it->second, key);
    }

    const std::map<std::string, Value>& entries() const { return entries_; }

private:
    template <typename T>
    static T coerce(const Value& v, const std::string& key) {
        if constexpr (std::is_same_v<T, double>) {
            if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
        }
        if constexpr (std::is_same_v<T, int>) {
            if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<int>(*i);
            throw ConfigError("config key '" + key + "' is not an integer");
        } else if constexpr (std::is_same_v<T, std::size_t>) {
            if (const auto* i = std::get_if<std::int64_t>(&v)) {
                if (*i < 0) throw ConfigError("config key '" + key + "' must be non-negative");
                return static_cast<std::size_t>(*i);
            }
            throw ConfigError("config key '" + key + "' is not an integer");
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (const auto* i = std::get_if<std::int64_t>(&v)) {
                if (*i < 0) throw ConfigError("config key '" + key + "' must be non-negative");
                return static_cast<std::uint64_t>(*i);
            }
            throw ConfigError("config key '" + key + "' is not an integer");
        } else if constexpr (std::is_same_v<T, std::vector<std::uint64_t>>) {
            if (const auto* a = std::get_if<std::vector<std::int64_t>>(&v)) {
                std::vector<std::uint64_t> out;
                for (auto i : *a) {
                    if (i < 0) throw ConfigError("config key '" + key + "' must be non-negative");
                    out.push_back(static_cast<std::uint64_t>(i));
                }
                return out;
            }
            throw ConfigError("config key '" + key + "' is not an integer array");
        } else {
            if (const auto* p = std::get_if<T>(&v)) return *p;
            throw ConfigError("config key '" + key + "' has an unexpected type");
        }
    }

    std::map<std::string, Value> entries_;
};

class Document {
public:
    bool has_table(const std::string& name) const { return tables_.count(name) > 0; }

    const Table& table(const std::string& name) const {
        auto it = tables_.find(name);
        if (it == tables_.end()) throw ConfigError("missing config section: [" + name + "]");
        return it->second;
    }

    Table& table_mut(const std::string& name) { return tables_[name]; }

    std::vector<std::string> table_names() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : tables_) out.push_back(k);
        return out;
    }

private:
    std::map<std::string, Table> tables_;
};

namespace detail {

inline std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

inline Value parse_scalar(const std::string& raw, int line_no) {
    std::string s = trim(raw);
    if (s.empty()) throw ConfigError("empty value at line " + std::to_string(line_no));
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"')
            throw ConfigError("unterminated string at line " + std::to_string(line_no));
        return s.substr(1, s.size() - 2);
    }
    if (s == "true") return true;
    if (s == "false") return false;
    bool is_float = false;
    for (char c : s)
        if (c == '.' || c == 'e' || c == 'E') is_float = true;
    try {
        if (is_float) return std::stod(s);
        return static_cast<std::int64_t>(std::stoll(s));
    } catch (const std::exception&) {
        throw ConfigError("cannot parse value '" + s + "' at line " + std::to_string(line_no));
    }
}

inline Value parse_value(const std::string& raw, int line_no) {
    std::string s = trim(raw);
    if (s.empty()) throw ConfigError("empty value at line " + std::to_string(line_no));
    if (s.front() != '[') return parse_scalar(s, line_no);
    if (s.back() != ']')
        throw ConfigError("unterminated array at line " + std::to_string(line_no));
    std::string inner = trim(s.substr(1, s.size() - 2));
    if (inner.empty()) return std::vector<std::int64_t>{};
    std::vector<Value> items;
    for (const auto& part : split(inner, ','))
        if (!trim(part).empty()) items.push_back(parse_scalar(part, line_no));
    if (std::holds_alternative<std::string>(items.front())) {
        std::vector<std::string> out;
        for (auto& it : items) out.push_back(std::get<std::string>(it));
        return out;
    }
    bool any_float = false;
    for (const auto& it : items)
        if (std::holds_alternative<double>(it)) any_float = true;
    if (any_float) {
        std::vector<double> out;
        for (auto& it : items)
            out.push_back(std::holds_alternative<double>(it)
                              ? std::get<double>(it)
                              : static_cast<double>(std::get<std::int64_t>(it)));
        return out;
    }
    std::vector<std::int64_t> out;
    for (auto& it : items) out.push_back(std::get<std::int64_t>(it));
    return out;
}

} // namespace detail

inline Document parse(std::istream& in) {
    Document doc;
    std::string current = "";
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string s = trim(detail::strip_comment(line));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError("malformed section header at line " + std::to_string(line_no));
            current = trim(s.substr(1, s.size() - 2));
            if (current.empty())
                throw ConfigError("empty section name at line " + std::to_string(line_no));
            doc.table_mut(current);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " + std::to_string(line_no));
        std::string key = trim(s.substr(0, eq));
        if (key.empty()) throw ConfigError("empty key at line " + std::to_string(line_no));
        doc.table_mut(current).set(key, detail::parse_value(s.substr(eq + 1), line_no));
    }
    return doc;
}

inline Document parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    return parse(in);
}

} // namespace mcdiag::toml
