#pragma once

#include <stdexcept>
#include <string>

namespace ecgvae {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or vector extents that do not agree with what an operation needs.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked in the wrong order (e.g. backward without a recorded forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced or consumed where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range hyperparameter or argument.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Base for everything that goes wrong reading or writing files.
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class BadMagicError : public DataError {
 public:
  using DataError::DataError;
};

class VersionError : public DataError {
 public:
  using DataError::DataError;
};

class TruncatedError : public DataError {
 public:
  using DataError::DataError;
};

/// Checksum mismatch or manifest/parameter disagreement.
class IntegrityError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace ecgvae
