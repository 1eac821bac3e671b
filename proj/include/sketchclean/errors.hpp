#pragma once

#include <stdexcept>
#include <string>

namespace sketchclean {

// Caller supplied an invalid argument or mismatched shapes. Maps to CLI exit 2.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sketchclean
