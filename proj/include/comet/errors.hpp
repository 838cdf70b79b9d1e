#pragma once

#include <stdexcept>

namespace comet {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Incompatible vector/matrix dimensions.
struct ShapeError : Error {
  using Error::Error;
};

// Invalid distribution or transform parameter (e.g. sigma <= 0).
struct ParamError : Error {
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

// Input data unusable for fitting (too few points, degenerate column).
struct DataError : Error {
  using Error::Error;
};

// Non-finite intermediate value or failed numerical routine.
struct NumericError : Error {
  using Error::Error;
};

// Missing or unreadable input file.
struct FileError : Error {
  using Error::Error;
};

// Malformed text input (CSV cell, config line).
struct ParseError : Error {
  using Error::Error;
};

// Model file failed version, checksum, or structural validation.
struct CorruptModelError : Error {
  using Error::Error;
};

}  // namespace comet
