#pragma once

#include <stdexcept>
#include <string>

namespace stg {

/// Base of every error thrown by the library. The CLI maps the three
/// families below onto exit codes 2, 3 and 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke a precondition (bad index, mismatched shapes, bad flag).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Input data could not be read or failed validation.
class DataError : public Error {
 public:
  using Error::Error;
};

class MissingFileError : public DataError {
 public:
  explicit MissingFileError(const std::string& path)
      : DataError("missing file: " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class ResolutionMismatchError : public DataError {
 public:
  using DataError::DataError;
};

/// Non-finite parameters, degenerate rotations and similar blow-ups.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class BehindCameraError : public UsageError {
 public:
  using UsageError::UsageError;
};

}  // namespace stg
