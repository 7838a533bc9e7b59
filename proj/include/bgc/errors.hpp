#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bgc {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operands disagree in length, arity or width.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A value is well-formed but unusable here (bad config, leaf out of range...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Internal consistency check failed (e.g. a stale evaluation cache).
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Binary input could not be decoded. Carries the byte offset of the problem.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Text input could not be parsed. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace bgc
