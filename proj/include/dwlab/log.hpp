#pragma once

#include <string_view>

namespace dwlab::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

/// Threshold read once from the LAB_LOG environment variable
/// (error|warn|info|debug, default warn).
Level threshold();

void write(Level lvl, std::string_view msg);

inline void error(std::string_view m) { write(Level::error, m); }
inline void warn(std::string_view m) { write(Level::warn, m); }
inline void info(std::string_view m) { write(Level::info, m); }
inline void debug(std::string_view m) { write(Level::debug, m); }

}  // namespace dwlab::log
