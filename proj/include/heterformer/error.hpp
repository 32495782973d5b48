#pragma once

#include <stdexcept>
#include <string>

namespace heterformer {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file, unreadable path, or corrupt checkpoint.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A value went non-finite where finiteness is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace heterformer
