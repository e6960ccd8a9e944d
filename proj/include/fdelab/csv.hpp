#pragma once

#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <string>

namespace fdelab::csv {

/// Floats are always written with 17 significant digits so round-trips are
/// value-exact and files are byte-reproducible.
inline std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

inline std::string fmt(std::size_t v) {
    return std::to_string(v);
}

inline std::string fmt(int v) {
    return std::to_string(v);
}

inline std::string fmt(bool v) {
    return v ? "1" : "0";
}

inline std::string fmt(const std::string& v) {
    return v;
}

inline void write_row(std::ostream& out, std::initializer_list<std::string> cells) {
    bool first = true;
    for (const auto& cell : cells) {
        if (!first) out << ',';
        out << cell;
        first = false;
    }
    out << '\n';
}

} // namespace fdelab::csv
