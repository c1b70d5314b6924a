#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace weyl {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape problems: dimension mismatch, degree overflow, bad slot index.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A metric failed the leading-principal-minor test.
class SingularMetricError : public Error {
 public:
  using Error::Error;
};

/// Malformed expression text. `offset` is the 0-based character position.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation left the domain of ln or division.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, std::string subexpression)
      : Error(what + " in '" + subexpression + "'"),
        subexpression_(std::move(subexpression)) {}
  const std::string& subexpression() const noexcept { return subexpression_; }

 private:
  std::string subexpression_;
};

/// Invalid operation input that is not a shape problem (vanishing form, f mismatch, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace weyl
