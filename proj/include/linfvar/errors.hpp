#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace linfvar {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset()` is the 0-based byte offset of the
/// offending token in the source string.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation outside the domain of an elementary function (log of a
/// nonpositive number, division by zero, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Evaluation exactly at a kink or branch point (abs at 0, fractional power
/// at 0). Callers are expected to mask such points.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Invalid caller input: bad shapes, empty sets, schema violations.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed to make progress (line search exhausted,
/// non-finite objective).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace linfvar
