// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>

namespace partsync {

enum class LogLevel { debug, info, warn, error };

/// Line logger that mirrors to stderr and, optionally, to a run log file.
class Logger {
 public:
  Logger() = default;
  explicit Logger(const std::filesystem::path& file);

  void set_level(LogLevel level) { level_ = level; }
  void set_quiet(bool quiet) { quiet_ = quiet; }

  void log(LogLevel level, std::string_view message);
  void debug(std::string_view m) { log(LogLevel::debug, m); }
  void info(std::string_view m) { log(LogLevel::info, m); }
  void warn(std::string_view m) { log(LogLevel::warn, m); }
  void error(std::string_view m) { log(LogLevel::error, m); }

  /// Process-wide fallback used by library code that was not handed a logger.
  static Logger& global();

 private:
  std::mutex mutex_;
  std::ofstream file_;
  LogLevel level_ = LogLevel::info;
  bool quiet_ = false;
};

/// Small helper for building log lines: `log_line("step ", i, " loss ", l)`.
template <typename... Args>
std::string cat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace partsync
