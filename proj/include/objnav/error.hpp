#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace objnav {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A document or stream that is not well-formed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at byte " + std::to_string(position) + ")"), position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// A well-formed value that violates a domain invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::string invariant, const std::string& detail)
      : Error(invariant + ": " + detail), invariant_(std::move(invariant)) {}

  const std::string& invariant() const { return invariant_; }

 private:
  std::string invariant_;
};

/// A caller-supplied argument outside an operation's domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace objnav
