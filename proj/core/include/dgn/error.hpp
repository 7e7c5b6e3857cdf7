#pragma once

#include <stdexcept>
#include <string>

namespace dgn {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad magic, unsupported version, or otherwise unparseable bytes.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Input violates a documented invariant or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure or truncated payload.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Throws ValidationError(message) when cond is false.
void require(bool cond, const std::string& message);

}  // namespace dgn
