// Error types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace rade {

// Raised when a numeric pipeline produces a non-finite value.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Raised for malformed or inconsistent configuration input. Carries the
// source line when the problem maps to one.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

// Raised when a warm-up run yields no usable training data.
class InsufficientDataError : public std::runtime_error {
 public:
  explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a metric is requested on a trace that has no requests.
class NoDataError : public std::runtime_error {
 public:
  explicit NoDataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rade
