#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed circuit, graph or decomposition text.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// An operation was called on input that violates its precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A configured size/term/enumeration budget was exceeded.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace twf
