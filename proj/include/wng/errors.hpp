#pragma once

#include <stdexcept>
#include <string>

namespace wng {

/// Raised when an input or intermediate quantity is not finite. `stage()`
/// names the computation that produced it.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// A required input (e.g. per-sample scores) is absent.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// KL divergence against a degenerate reference distribution.
class DivergenceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Model parameters outside their admissible set.
class InvalidStateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Mutually incompatible configuration values.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace wng
