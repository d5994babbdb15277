#pragma once

#include <stdexcept>
#include <string>

namespace genreg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor or operator shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument value was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, failed line searches and other numerical aborts.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable files.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace genreg
