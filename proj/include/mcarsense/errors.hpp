#pragma once

#include <stdexcept>
#include <string>

namespace mcarsense {

/// Invalid distribution or algorithm parameters (non-positive shape, empty weights, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure could not reach the requested accuracy.
class AccuracyError : public std::runtime_error {
 public:
  AccuracyError(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what), estimate_(estimate), error_bound_(error_bound) {}

  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

/// Underflow, overflow or an all-zero density where a positive one is required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A functional is undefined for the given measure (e.g. H(e^q) = 0).
class DegenerateMeasureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A probability sits on the boundary {0, 1} where a log-odds is required.
class BoundaryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Data that cannot be used: no observed outcomes, inconsistent records, too few draws.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Metropolis-Hastings step failed to mix after adaptation.
class MixingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mcarsense
