#pragma once

#include <stdexcept>
#include <string>

namespace idiff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A direct factorization hit a pivot below the singularity threshold.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a map (non-finite input, bad radius, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure failed in a way the caller has to handle.
class NumericalError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace detail
}  // namespace idiff
