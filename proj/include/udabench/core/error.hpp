#pragma once

#include <stdexcept>
#include <string>

namespace udabench {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible shapes or malformed graphs.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, non-convergence, divergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid settings: unknown ids, out-of-range hyperparameters, impossible splits.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad call-site data (labels out of range, too few samples, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. Carries the byte offset or line where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t position)
      : Error(what), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace udabench
