#pragma once

#include <stdexcept>
#include <string>

namespace mcdgln {

// Error categories map one-to-one onto the CLI exit codes.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes incompatible with an operation's algebraic rule.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or synthetic spec (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset or manifest validation failure (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, failed factorizations, misuse of the tape (exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint format, version or shape mismatch (exit code 5).
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace mcdgln
