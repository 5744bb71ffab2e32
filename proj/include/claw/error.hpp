#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace claw {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression or PDE text. `position` is a byte offset into the input.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

/// An operation was handed input outside its precondition.
class DomainError : public Error {
public:
  using Error::Error;
};

/// The expression is not a total x-derivative in the given coordinates.
class NotExactError : public Error {
public:
  using Error::Error;
};

/// A closed form exists mathematically but lies outside the kernel (antiderivatives
/// of mixed kernel families, non-polynomial homotopy integrands, ...).
class UnsupportedError : public Error {
public:
  using Error::Error;
};

/// Evaluation at a pole of a kernel atom.
class SingularError : public Error {
public:
  using Error::Error;
};

/// Numerical integration failure (blow-up, bad grid configuration).
class NumericError : public Error {
public:
  using Error::Error;
};

/// Broken internal invariant.
class InternalError : public Error {
public:
  using Error::Error;
};

}  // namespace claw
