#pragma once

#include <stdexcept>
#include <string>

namespace popest {

/// Bad invocation: unknown option, invalid hyperparameter, violated
/// precondition on an argument.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The input data itself is malformed or inconsistent.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace popest
