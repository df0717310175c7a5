#pragma once

#include <stdexcept>
#include <string>

namespace arbsim {

/// Malformed or out-of-range configuration. The message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument to a model routine (e.g. zero nodes).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The fixed-point search ended without meeting its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Collision probability of one: the expected access delay diverges.
class SaturationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output could not be written.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace arbsim
