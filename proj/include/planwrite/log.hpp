#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace planwrite {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

inline LogLevel& log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("PLANWRITE_LOG");
    if (env == nullptr) return LogLevel::Info;
    if (std::strcmp(env, "error") == 0) return LogLevel::Error;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

// Logging goes to stderr; stdout is reserved for data output.
template <typename... Args>
void log_at(LogLevel lvl, const char* fmt, Args... args) {
  if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
  const char* tag = lvl == LogLevel::Error  ? "error"
                    : lvl == LogLevel::Info ? "info"
                                            : "debug";
  std::fprintf(stderr, "[%s] ", tag);
  std::fprintf(stderr, fmt, args...);
  std::fprintf(stderr, "\n");
}

inline void log_error(const std::string& msg) { log_at(LogLevel::Error, "%s", msg.c_str()); }
inline void log_info(const std::string& msg) { log_at(LogLevel::Info, "%s", msg.c_str()); }
inline void log_debug(const std::string& msg) { log_at(LogLevel::Debug, "%s", msg.c_str()); }

}  // namespace planwrite
