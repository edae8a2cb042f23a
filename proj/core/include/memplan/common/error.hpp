#pragma once

#include <stdexcept>
#include <string>

namespace memplan {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input supplied by the caller: configuration, task files, CLI arguments.
// The harness maps this to exit status 1.
class UserError : public Error {
 public:
  using Error::Error;
};

// An operation was invoked in a state its contract does not allow.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Persisted data could not be read back.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace memplan
