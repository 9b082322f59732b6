// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/run_dir.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <string>

#include "partsync/dataset.hpp"

namespace partsync {

namespace {

std::filesystem::path prepare_dir(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

RunDirectory::RunDirectory(const std::filesystem::path& dir, const RunConfig& config)
    : dir_(prepare_dir(dir)), lock_(dir / "run.lock"), digest_(config_digest(config)), log_(dir / "run.log") {
  const int fd = ::open(lock_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    const int err = errno;
    lock_.clear();
    throw std::runtime_error("run directory " + dir_.string() + " is locked (" + std::strerror(err) + ")");
  }
  const auto pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
  save_config(dir_ / "config.json", config);
  log_.info("run directory " + dir_.string() + " config " + digest_);
}

RunDirectory::~RunDirectory() {
  if (!lock_.empty()) {
    std::error_code ec;
    std::filesystem::remove(lock_, ec);
  }
}

void RunDirectory::write_report(nlohmann::json report) const {
  report["config_digest"] = digest_;
  write_json(dir_ / "report.json", report);
}

}  // namespace partsync
