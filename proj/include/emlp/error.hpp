#pragma once

#include <stdexcept>
#include <string>

namespace emlp {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A scalar argument is outside its valid range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// An operation was called in the wrong object state (e.g. backward without forward).
class StateError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a content precondition (e.g. a class with no samples).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A file does not follow the expected binary or text layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A file header disagrees with the payload that follows it.
class CorruptionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Two inputs that must describe the same samples disagree.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace emlp
