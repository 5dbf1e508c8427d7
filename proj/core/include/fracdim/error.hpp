#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fracdim {

/// Rejected input: a value outside an operation's domain.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Gaussian synthesis failed (covariance repair or embedding exhausted).
class SynthesisError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Solver aborted; carries the step at which the state left the guard box.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

/// Malformed experiment configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace fracdim
