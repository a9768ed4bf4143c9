#pragma once

#include <stdexcept>
#include <string>

namespace qmtk {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments (maps to exit/status code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or unusable input data (maps to exit/status code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace qmtk
