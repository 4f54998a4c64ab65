#pragma once

#include <stdexcept>
#include <string>

namespace gravicat {

// Bad input: violated precondition, malformed file, unknown flag. CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Result left the representable range (overflow, divergent bound).
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

// Numerical procedure failed: underflowed posterior, drifting integrator,
// non-finite derivative. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gravicat
