// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "partsync/config.hpp"
#include "partsync/logging.hpp"

namespace partsync {

/// A run directory owned by one process for its lifetime. Construction
/// creates the directory, takes run.lock (failing when another process holds
/// it) and stores the materialized config as config.json.
class RunDirectory {
 public:
  RunDirectory(const std::filesystem::path& dir, const RunConfig& config);
  ~RunDirectory();

  RunDirectory(const RunDirectory&) = delete;
  RunDirectory& operator=(const RunDirectory&) = delete;

  const std::filesystem::path& path() const { return dir_; }
  std::filesystem::path file(const std::string& name) const { return dir_ / name; }
  Logger& log() { return log_; }

  /// Writes report.json with the config digest added.
  void write_report(nlohmann::json report) const;

 private:
  std::filesystem::path dir_;
  std::filesystem::path lock_;
  std::string digest_;
  Logger log_;
};

}  // namespace partsync
