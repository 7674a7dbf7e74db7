// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#pragma once

#include <stdexcept>
#include <string>

namespace fes {

/// Precondition violated by the caller (bad dimensions, bad parameter range).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Evaluation point outside the domain a field is defined on.
class OutOfDomain : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Linear algebra failure, e.g. a kernel matrix that is not symmetric.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Series with zero variance handed to an autocorrelation estimator.
class DegenerateSeries : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No self-consistent Sokal window exists for the series.
///
/// `lower_bound()` is max(W_max / c, tau(W_max)) for the largest window
/// examined; no admissible window yields a smaller estimate.
class ChainTooShort : public std::runtime_error {
 public:
  ChainTooShort(const std::string& what, double lower_bound)
      : std::runtime_error(what), lower_bound_(lower_bound) {}
  double lower_bound() const noexcept { return lower_bound_; }

 private:
  double lower_bound_;
};

/// Initial ensemble has a walker with non-finite log density.
class InitializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration; `key()` names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Filesystem failure; the message carries the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fes
