#pragma once

#include <stdexcept>
#include <string>

namespace rcb {

/// Out-of-range index, bad argument combination, or a violated precondition
/// that the caller could have checked.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An internal consistency check failed (e.g. a propensity below the noise
/// floor). Always indicates a bug, never bad input.
class IntegrityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The simplex hit its iteration cap.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double best_value)
      : std::runtime_error(what), best_value_(best_value) {}
  /// Objective of the best feasible basis visited before giving up.
  double best_value() const { return best_value_; }

 private:
  double best_value_;
};

/// The balanced-mixture search did not reach feasibility.
class BalanceFailure : public std::runtime_error {
 public:
  BalanceFailure(const std::string& what, double max_violation)
      : std::runtime_error(what), max_violation_(max_violation) {}
  double max_violation() const { return max_violation_; }

 private:
  double max_violation_;
};

/// Malformed config or instance document; the message carries the location.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rcb
