#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ijgp {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent model data: cardinality clash, malformed network, bad decomposition.
class ModelError : public Error {
 public:
  using Error::Error;
};

// Evidence has zero probability under the model (or a message lost all mass).
class InconsistentEvidence : public Error {
 public:
  using Error::Error;
};

// A memory/time guard (table size, enumeration size) would be exceeded.
class GuardExceeded : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace ijgp
