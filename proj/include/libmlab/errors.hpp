#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace libmlab {

// Denominator of a closed-form matrix or constant vanished (lambda = 0 with
// vacuum densities, or rho = 0 in the two-color form).
class DegenerateDenominator : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A parameter map was asked to leave its domain of validity
// (e.g. D12 <= max(D13, D23)).
class ConstraintViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Linear system with vanishing determinant (Maxwell-Stefan f(u1,u2) = 0).
class SingularSystem : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The pair sweep could not restore cyclic order; the step is too large.
class SimulationAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Explicit PDE step would violate its stability bound.
class StabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// PDE solution left the sane range (NaN, inf or |value| > 1e6).
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace libmlab
