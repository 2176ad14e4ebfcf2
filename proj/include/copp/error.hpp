#pragma once

#include <stdexcept>
#include <string>

namespace copp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unreadable input file. Message names the offending row.
class IngestionError : public Error {
 public:
  using Error::Error;
};

/// Input violates a documented precondition (non-positive scale, bad config, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range argument to a numerical routine.
class ArgumentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Estimation hit a degenerate state (zero background mass, zero spread, zero intensity).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// A memory / size guard refused the request.
class ResourceGuardError : public Error {
 public:
  using Error::Error;
};

}  // namespace copp
