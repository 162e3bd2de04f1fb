#pragma once

#include <stdexcept>
#include <string>

namespace semalloc {

// Malformed or inconsistent configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable/unwritable files or malformed artifacts. Exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Metrics file whose header does not match the expected layout.
class SchemaError : public IoError {
 public:
  using IoError::IoError;
};

// Persistent non-finite values during training or evaluation. Exit code 4.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace semalloc
