#pragma once

#include <cstdio>
#include <string>

namespace conjassess::io {

/// Floats serialized with 17 significant digits (round-trip exact).
inline std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace conjassess::io
