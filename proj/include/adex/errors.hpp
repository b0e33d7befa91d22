#pragma once

#include <stdexcept>
#include <string>

namespace adex {

// Raised when an event stream violates the log contract (duplicate click ids,
// orphan conversions, conversion before its click, ...).
class LogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the line parser; carries the 1-based line number of the offending record.
class ParseError : public LogError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : LogError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Raised when an estimator meets a snapshot it cannot produce a finite answer
// for (e.g. conversions present but zero weighted elapsed time).
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for malformed run configuration documents.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adex
