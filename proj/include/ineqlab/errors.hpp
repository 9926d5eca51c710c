#pragma once

#include <stdexcept>
#include <string>

namespace ineqlab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the inputs was violated.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// The input is valid but the requested quantity is undefined there
/// (constant density for the centering, disconnected chain for the gap).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// A computation lost accuracy beyond its stated tolerance.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace ineqlab
