// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/logging.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>

namespace partsync {

namespace {

const char* level_name(LogLevel level) {
  switch (level) {
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
  }
  return "?";
}

}  // namespace

Logger::Logger(const std::filesystem::path& file) : file_(file, std::ios::app) {}

void Logger::log(LogLevel level, std::string_view message) {
  if (level < level_) return;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream line;
  line << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << " [" << level_name(level) << "] " << message
       << '\n';
  std::lock_guard lock(mutex_);
  if (!quiet_ || level >= LogLevel::warn) std::cerr << line.str();
  if (file_.is_open()) file_ << line.str() << std::flush;
}

Logger& Logger::global() {
  static Logger logger;
  return logger;
}

}  // namespace partsync
