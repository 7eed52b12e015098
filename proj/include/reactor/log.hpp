#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace reactor::log {

enum class Level { Error = 0, Info = 1, Debug = 2 };

/// REACTOR_LOG={error|info|debug}; default error.
inline Level level() {
  static const Level lvl = [] {
    const char* env = std::getenv("REACTOR_LOG");
    if (!env) return Level::Error;
    std::string v(env);
    if (v == "debug") return Level::Debug;
    if (v == "info") return Level::Info;
    return Level::Error;
  }();
  return lvl;
}

inline void error(const std::string& msg) { std::cerr << "[reactor:error] " << msg << "\n"; }

inline void warn(const std::string& msg) {
  if (level() >= Level::Info) std::cerr << "[reactor:warn] " << msg << "\n";
}

inline void info(const std::string& msg) {
  if (level() >= Level::Info) std::cerr << "[reactor:info] " << msg << "\n";
}

inline void debug(const std::string& msg) {
  if (level() >= Level::Debug) std::cerr << "[reactor:debug] " << msg << "\n";
}

}  // namespace reactor::log
