#pragma once

#include <stdexcept>
#include <string>

namespace walkrl {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that do not fit together (matrix/vector sizes, zero dimensions).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Environment used out of order (step before reset, step after done) or fed NaN.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// A simulation or training quantity became non-finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Config file problems, split by kind so messages and tests can tell them apart.
class ConfigParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class UnknownKeyError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class TypeMismatchError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ConstraintError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Checkpoint failures, kept apart so callers can tell them from each other.
class CorruptCheckpointError : public IoError {
 public:
  using IoError::IoError;
};

class VersionMismatchError : public IoError {
 public:
  using IoError::IoError;
};

class ShapeMismatchError : public IoError {
 public:
  using IoError::IoError;
};

// A second writer tried to open a metrics log that is already in use.
class LockError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace walkrl
