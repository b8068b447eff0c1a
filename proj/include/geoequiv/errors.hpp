#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geoequiv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text; `offset` is the byte offset of the failure.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation outside the domain of a function (log of non-positive, x/0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid user input to an operation (wrong sizes, violated preconditions).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Model manifest / geometry validation failure. `path` names the offending field.
class ModelError : public Error {
 public:
  ModelError(const std::string& path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Numerical breakdown: singular frame, degenerate Gram matrix, step-size underflow.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace geoequiv
