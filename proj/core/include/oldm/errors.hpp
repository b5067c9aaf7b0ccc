// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace oldm {

// Bad data handed to an operation (shape mismatch, unnormalized input, ...).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Inconsistent or unusable configuration (negative scale, odd embedding dim, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem and serialization failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// A retrying procedure gave up before reaching the requested count.
class CapacityError : public std::runtime_error {
 public:
  CapacityError(const std::string& msg, std::size_t achieved)
      : std::runtime_error(msg), achieved_count(achieved) {}
  std::size_t achieved_count;
};

// Training aborted (non-finite loss or gradient); message carries the step
// and the first offending parameter.
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace oldm
