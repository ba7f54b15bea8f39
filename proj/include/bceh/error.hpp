#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bceh {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression; `offset()` is the byte offset of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation left the domain of a partial operation (log of a nonpositive value, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A caller-side precondition does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A construction ran but its verified postconditions failed.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

}  // namespace bceh
