// format.hpp
//
// Text encodings shared by the command-line tool: exact numbers, set
// serialization ("lo:hi|lo:hi", "empty") and topology tags.
#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "anycs/core.hpp"

namespace anycs {

/// 17 significant digits, so parsing the text recovers the same double.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Strict parse of a whole token; throws ConfigError on trailing junk.
inline double parse_number(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) throw ConfigError("empty numeric field");
    const std::string tmp(s);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size()) throw ConfigError("not a number: '" + tmp + "'");
    return v;
}

inline std::string serialize_set(const ConfidenceSet& s) {
    if (s.is_empty()) return "empty";
    std::string out;
    for (const auto& i : s.intervals()) {
        if (!out.empty()) out += '|';
        out += format_number(i.lo);
        out += ':';
        out += format_number(i.hi);
    }
    return out;
}

inline ConfidenceSet parse_set(std::string_view text) {
    if (text == "empty") return ConfidenceSet::empty();
    std::vector<Interval> parts;
    while (!text.empty()) {
        const auto bar = text.find('|');
        const auto piece = text.substr(0, bar);
        const auto colon = piece.find(':');
        if (colon == std::string_view::npos) throw ConfigError("malformed set piece: '" + std::string(piece) + "'");
        parts.push_back({parse_number(piece.substr(0, colon)), parse_number(piece.substr(colon + 1))});
        if (bar == std::string_view::npos) break;
        text.remove_prefix(bar + 1);
    }
    return ConfidenceSet(std::move(parts));
}

/// empty, interval, ray, line, or union-k for k disjoint pieces.
inline std::string topology_tag(const ConfidenceSet& s) {
    if (s.is_empty()) return "empty";
    if (s.components() > 1) return "union-" + std::to_string(s.components());
    const auto& i = s.intervals().front();
    if (std::isinf(i.lo) && std::isinf(i.hi)) return "line";
    if (std::isinf(i.lo) || std::isinf(i.hi)) return "ray";
    return "interval";
}

}  // namespace anycs
