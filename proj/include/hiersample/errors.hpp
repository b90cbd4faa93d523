#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hiersample {

// Input data violates a documented invariant (bad index, duplicate id, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed record in a dataset or hierarchy file.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Caller broke an operation precondition (invalid ratio, zero counts, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace hiersample
