#pragma once

#include <stdexcept>
#include <string>

namespace sista {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched vector/matrix sizes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input data violates a structural requirement (negative mass, empty margin,
// empty support row, bad manifest, ...).
class InvalidProblem : public Error {
 public:
  using Error::Error;
};

// An exponent left the representable range even after stabilization.
class OverflowError : public Error {
 public:
  using Error::Error;
};

// Malformed text input.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError("dimension mismatch: " + what);
}

}  // namespace detail
}  // namespace sista
