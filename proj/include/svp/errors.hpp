#pragma once

#include <stdexcept>
#include <string>

namespace svp {

// Every failure raised by the library derives from Error; the C API maps each
// subclass onto a distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public IoError {
 public:
  using IoError::IoError;
};

class VersionError : public IoError {
 public:
  using IoError::IoError;
};

// Checkpoint or dataset does not fit the configuration it is loaded into.
class IncompatibleError : public Error {
 public:
  using Error::Error;
};

// A loss component went NaN/inf; term() names the offending component.
class NumericError : public Error {
 public:
  NumericError(std::string term, const std::string& what)
      : Error(what), term_(std::move(term)) {}
  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

}  // namespace svp
