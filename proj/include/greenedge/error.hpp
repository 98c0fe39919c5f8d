#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace greenedge {

// Bad input: out-of-range values, inconsistent shapes, unknown keys.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed text input. Line numbers are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& aWhat, std::size_t aLine)
      : std::runtime_error("line " + std::to_string(aLine) + ": " + aWhat)
      , theLine(aLine) {
  }

  std::size_t line() const noexcept {
    return theLine;
  }

 private:
  std::size_t theLine;
};

// Caller broke a documented precondition between two library calls.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Failure while the work is in progress (diverged training, missing file).
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

} // namespace greenedge
