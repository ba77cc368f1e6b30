#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace anisolve {

enum class LogLevel : int { Error = 0, Info = 1, Debug = 2 };

/// Verbosity comes from ANISOLVE_LOG in {error, info, debug}; all log output
/// goes to standard error, numeric results only ever to CSV/JSON.
inline LogLevel log_level() {
    static LogLevel lvl = [] {
        const char* env = std::getenv("ANISOLVE_LOG");
        if (env == nullptr) return LogLevel::Error;
        if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
        if (std::strcmp(env, "info") == 0) return LogLevel::Info;
        return LogLevel::Error;
    }();
    return lvl;
}

inline void log_at(LogLevel lvl, const std::string& msg) {
    if (static_cast<int>(lvl) <= static_cast<int>(log_level()))
        std::fprintf(stderr, "[anisolve] %s\n", msg.c_str());
}

inline void log_error(const std::string& msg) { log_at(LogLevel::Error, msg); }
inline void log_info(const std::string& msg) { log_at(LogLevel::Info, msg); }
inline void log_debug(const std::string& msg) { log_at(LogLevel::Debug, msg); }

} // namespace anisolve
