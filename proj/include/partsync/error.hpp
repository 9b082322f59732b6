// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace partsync {

/// Process exit codes used by the command-line tools.
enum class ExitCode : int {
  ok = 0,
  failure = 1,
  config_error = 2,
  missing_input = 3,
  numeric_failure = 4,
};

/// Malformed or inconsistent configuration (unknown keys, bad values).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required checkpoint, dataset or stage output is absent.
class MissingInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values appeared in a computation that must stay finite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Corrupt or unreadable file container.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace partsync
