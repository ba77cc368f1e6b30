#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>

#include "anisolve/grid.hpp"

namespace anisolve {

/// 17 significant digits: enough to round-trip any double bit-exactly.
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Header row then one node per line in storage order: x[,y],u.
inline void write_solution_csv(std::ostream& os, const GridFunction& u) {
    const Grid& g = u.grid();
    os << (g.dim() == 1 ? "x,u\n" : "x,y,u\n");
    for (std::size_t j = 0; j < u.size(); ++j) {
        auto c = g.nodeCoord(j);
        os << format_g17(c[0]);
        if (g.dim() == 2) os << ',' << format_g17(c[1]);
        os << ',' << format_g17(u[j]) << '\n';
    }
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace anisolve
