// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Line-delimited JSON logging to stderr.
//
#pragma once

#include <atomic>
#include <cstdio>
#include <mutex>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace splatforge::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

namespace detail {
inline std::atomic<Level>& threshold() {
    static std::atomic<Level> level{Level::warn};
    return level;
}
inline std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}
inline const char* name(Level l) {
    switch (l) {
        case Level::debug: return "debug";
        case Level::info: return "info";
        case Level::warn: return "warn";
        case Level::error: return "error";
        default: return "off";
    }
}
}  // namespace detail

inline void set_level(Level l) { detail::threshold().store(l); }
inline Level level() { return detail::threshold().load(); }

inline Level parse_level(std::string_view s) {
    if (s == "debug") return Level::debug;
    if (s == "info") return Level::info;
    if (s == "warn") return Level::warn;
    if (s == "error") return Level::error;
    return Level::off;
}

inline void emit(Level l, std::string_view msg, nlohmann::json fields = nlohmann::json::object()) {
    if (l < level()) return;
    fields["level"] = detail::name(l);
    fields["msg"] = msg;
    const std::string line = fields.dump();
    std::lock_guard lock(detail::sink_mutex());
    std::fprintf(stderr, "%s\n", line.c_str());
}

inline void debug(std::string_view m, nlohmann::json f = nlohmann::json::object()) { emit(Level::debug, m, std::move(f)); }
inline void info(std::string_view m, nlohmann::json f = nlohmann::json::object()) { emit(Level::info, m, std::move(f)); }
inline void warn(std::string_view m, nlohmann::json f = nlohmann::json::object()) { emit(Level::warn, m, std::move(f)); }

}  // namespace splatforge::log
