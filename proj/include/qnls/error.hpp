#pragma once

#include <stdexcept>
#include <string>

namespace qnls {

/// Argument outside the mathematical domain of an operation (negative s, T <= t, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Exponential term evaluated past the double-precision safe range.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Invalid construction parameters (grid sizes, configs, specs).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Iterative method failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace qnls
