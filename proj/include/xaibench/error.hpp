#pragma once

#include <stdexcept>
#include <string>

namespace xaibench {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad arity, out-of-range value).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// File system or codec failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace xaibench
