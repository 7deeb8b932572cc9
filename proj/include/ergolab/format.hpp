#pragma once

#include <cstdio>
#include <string>

namespace ergo {

// Round-trip double formatting (17 significant digits) shared by every CSV
// and JSON artifact so reruns are byte-identical.
inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace ergo
