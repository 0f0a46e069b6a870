#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace mgfn {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

// Level comes from MGFN_LOG (error|info|debug), default info.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("MGFN_LOG");
    if (!env) return LogLevel::Info;
    const std::string v(env);
    if (v == "error") return LogLevel::Error;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

inline void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cerr << "mgfn: " << msg << '\n';
}

inline void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::cerr << "mgfn[debug]: " << msg << '\n';
}

}  // namespace mgfn
