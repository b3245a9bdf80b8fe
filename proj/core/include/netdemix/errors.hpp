#pragma once

#include <stdexcept>
#include <string>

namespace netdemix {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Shape or length mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Value outside the mathematical domain of an operation (e.g. sigma <= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Caller broke an API contract (e.g. optimizer step without gradients).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// The requested model cannot handle the requested input (e.g. MLP on a new N).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace netdemix
