#pragma once

#include <stdexcept>
#include <string>

namespace revib {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or trajectory shapes that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values (caught before any work is done).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked in the wrong state, e.g. backward without a recorded graph.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : Error(line ? msg + " (line " + std::to_string(line) + ")" : msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Caller violated an operation precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace revib
