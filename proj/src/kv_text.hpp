#pragma once

// Line-oriented "key = value" text used by tensor headers, manifests and
// checkpoint headers. Lines starting with '#' are comments.

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "snnrfi/errors.hpp"

namespace snnrfi::detail {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Parses one line; returns false for blanks and comments.
inline bool parse_kv_line(const std::string& line, std::pair<std::string, std::string>& out,
                          const std::string& where) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') return false;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw FormatError(where + ": expected 'key = value', got '" + t + "'");
    out = {trim(t.substr(0, eq)), trim(t.substr(eq + 1))};
    if (out.first.empty()) throw FormatError(where + ": empty key");
    return true;
}

/// Reads key/value lines until EOF or until a line equal to `terminator`.
inline KeyValues read_kv(std::istream& in, const std::string& where, const std::string& terminator = {}) {
    KeyValues kv;
    std::string line;
    while (std::getline(in, line)) {
        if (!terminator.empty() && trim(line) == terminator) return kv;
        std::pair<std::string, std::string> entry;
        if (parse_kv_line(line, entry, where)) kv.push_back(std::move(entry));
    }
    if (!terminator.empty()) throw FormatError(where + ": missing '" + terminator + "' line");
    return kv;
}

inline const std::string* find_kv(const KeyValues& kv, const std::string& key) {
    for (const auto& [k, v] : kv)
        if (k == key) return &v;
    return nullptr;
}

inline const std::string& require_kv(const KeyValues& kv, const std::string& key, const std::string& where) {
    const auto* v = find_kv(kv, key);
    if (!v) throw FormatError(where + ": missing key '" + key + "'");
    return *v;
}

inline double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end) throw FormatError(where + ": not a number: '" + s + "'");
    return v;
}

inline std::int64_t parse_int(const std::string& s, const std::string& where) {
    std::int64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end) throw FormatError(where + ": not an integer: '" + s + "'");
    return v;
}

/// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

}  // namespace snnrfi::detail
