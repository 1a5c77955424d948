#pragma once

#include <stdexcept>
#include <string>

namespace nsrlab {

// Bad arguments, infeasible geometry, inadmissible exponents. CLI exit code 2.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Checksum or layout corruption in a container. CLI exit code 3.
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN, Inf or CFL blow-up during a computation. CLI exit code 4.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File could not be opened, read or written. CLI exit code 1.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nsrlab
