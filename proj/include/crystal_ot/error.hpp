#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace crystal_ot {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments: dimension mismatch, malformed measures, bad parameters.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Support too large for an exhaustive routine.
class SizeError : public InputError {
 public:
  using InputError::InputError;
};

/// Scenario or CLI configuration problem (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// No coupling avoids the forbidden edges of a restricted cost.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, std::size_t source_atom)
      : Error(what), source_atom_(source_atom) {}
  std::size_t source_atom() const noexcept { return source_atom_; }

 private:
  std::size_t source_atom_;
};

/// The simplex hit its pivot cap.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::int64_t iterations)
      : Error(what), iterations_(iterations) {}
  std::int64_t iterations() const noexcept { return iterations_; }

 private:
  std::int64_t iterations_;
};

/// Two routes that must agree did not.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace crystal_ot
