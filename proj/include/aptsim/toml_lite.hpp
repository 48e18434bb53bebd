#pragma once

// Reader for the TOML subset used by stack configuration files: [table] and
// [[array-of-tables]] headers, bare keys, basic strings, numbers, booleans and
// '#' comments. Errors are reported as ConfigError("line N: ...").

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aptsim/errors.hpp"

namespace aptsim::toml {

struct Entry {
    std::variant<double, std::string, bool> value;
    bool integer = false;
    std::size_t line = 0;
};

using Table = std::map<std::string, Entry>;

struct Document {
    Table root;
    std::map<std::string, Table> tables;
    std::map<std::string, std::vector<Table>> arrays;
};

namespace detail {

[[noreturn]] inline void fail(std::size_t line, const std::string& what) {
    throw ConfigError("line " + std::to_string(line) + ": " + what);
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline bool bare_key(std::string_view k) {
    if (k.empty()) return false;
    for (char c : k) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    }
    return true;
}

/// Parse a value starting at s; returns the unparsed remainder.
inline std::string_view parse_value(std::string_view s, std::size_t line, Entry& out) {
    out.line = line;
    if (s.empty()) fail(line, "missing value");
    if (s.front() == '"') {
        std::string str;
        std::size_t i = 1;
        for (; i < s.size() && s[i] != '"'; ++i) {
            if (s[i] == '\\') {
                if (++i >= s.size()) break;
                switch (s[i]) {
                    case '"': str += '"'; break;
                    case '\\': str += '\\'; break;
                    case 'n': str += '\n'; break;
                    case 't': str += '\t'; break;
                    default: fail(line, std::string("unsupported escape \\") + s[i]);
                }
            } else {
                str += s[i];
            }
        }
        if (i >= s.size()) fail(line, "unterminated string");
        out.value = std::move(str);
        return s.substr(i + 1);
    }
    std::size_t end = 0;
    while (end < s.size() && !std::isspace(static_cast<unsigned char>(s[end])) && s[end] != '#') ++end;
    const std::string_view tok = s.substr(0, end);
    if (tok == "true" || tok == "false") {
        out.value = tok == "true";
        return s.substr(end);
    }
    std::string digits;
    for (std::size_t i = 0; i < tok.size(); ++i) {
        if (tok[i] == '_') {
            if (i == 0 || i + 1 == tok.size() || !std::isdigit(static_cast<unsigned char>(tok[i - 1])) ||
                !std::isdigit(static_cast<unsigned char>(tok[i + 1]))) {
                fail(line, "misplaced '_' in number '" + std::string(tok) + "'");
            }
            continue;
        }
        digits += tok[i];
    }
    const char* first = digits.data();
    const char* last = digits.data() + digits.size();
    if (first != last && *first == '+') ++first;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (digits.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v)) {
        fail(line, "invalid value '" + std::string(tok) + "'");
    }
    out.value = v;
    out.integer = digits.find_first_of(".eE") == std::string::npos;
    return s.substr(end);
}

}  // namespace detail

[[nodiscard]] inline Document parse(std::string_view text) {
    Document doc;
    Table* current = &doc.root;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        line = detail::trim(line);
        if (line.empty() || line.front() == '#') continue;

        if (line.front() == '[') {
            const bool array = line.size() > 1 && line[1] == '[';
            const std::size_t close = line.find(array ? "]]" : "]");
            if (close == std::string_view::npos) detail::fail(line_no, "unterminated table header");
            const std::string_view rest = detail::trim(line.substr(close + (array ? 2 : 1)));
            if (!rest.empty() && rest.front() != '#') detail::fail(line_no, "unexpected text after table header");
            const std::string name(detail::trim(line.substr(array ? 2 : 1, close - (array ? 2 : 1))));
            if (!detail::bare_key(name)) detail::fail(line_no, "invalid table name '" + name + "'");
            if (array) {
                if (doc.tables.count(name)) detail::fail(line_no, "'" + name + "' already defined as a table");
                current = &doc.arrays[name].emplace_back();
            } else {
                if (doc.arrays.count(name)) detail::fail(line_no, "'" + name + "' already defined as an array of tables");
                if (!doc.tables.emplace(name, Table{}).second) detail::fail(line_no, "table [" + name + "] defined twice");
                current = &doc.tables[name];
            }
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) detail::fail(line_no, "expected key = value");
        const std::string key(detail::trim(line.substr(0, eq)));
        if (!detail::bare_key(key)) detail::fail(line_no, "invalid key '" + key + "'");
        Entry entry;
        std::string_view rest = detail::trim(detail::parse_value(detail::trim(line.substr(eq + 1)), line_no, entry));
        if (!rest.empty() && rest.front() != '#') detail::fail(line_no, "unexpected text after value");
        if (!current->emplace(key, std::move(entry)).second) detail::fail(line_no, "duplicate key '" + key + "'");
    }
    return doc;
}

}  // namespace aptsim::toml
