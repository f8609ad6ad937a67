#pragma once

#include <stdexcept>
#include <string>

namespace optomech {

/// Argument outside the domain of a physical formula (negative time, bad guard).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// The truncated number basis is too small for the requested evolution.
class TruncationError : public std::runtime_error {
public:
  TruncationError(const std::string &what, double leakage)
      : std::runtime_error(what), leakage_(leakage) {}
  double leakage() const noexcept { return leakage_; }

private:
  double leakage_;
};

/// Inconsistent or malformed input: device records, experiment configs, states.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A statistical estimator could not produce a value from the given data.
class EstimationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace optomech
