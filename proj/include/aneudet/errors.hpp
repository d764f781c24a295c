#pragma once

#include <stdexcept>
#include <string>

namespace aneudet {

// Exception hierarchy; each category maps onto one CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

// Invalid parameters or configuration (exit 2).
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

// Missing, corrupt or malformed input data (exit 3).
class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

// Inputs that are individually valid but disagree with each other (exit 4).
class ConsistencyError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

}  // namespace aneudet
