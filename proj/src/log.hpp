// Copyright (c) 2026 dgsa-lab contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace dgsa {

// Verbosity from DGSA_VERBOSE: 0 quiet (default), 1 progress, 2 debug.
inline int log_level() {
    static const int level = [] {
        const char* env = std::getenv("DGSA_VERBOSE");
        if (!env) return 0;
        const int v = std::atoi(env);
        return v < 0 ? 0 : v;
    }();
    return level;
}

inline void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[dgsa] " << msg << '\n';
}

inline void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "[dgsa:debug] " << msg << '\n';
}

}  // namespace dgsa
