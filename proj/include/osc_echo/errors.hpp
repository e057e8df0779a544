#pragma once

#include <stdexcept>
#include <string>

namespace osc_echo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input lies outside the domain of a formula (r <= 0, omega <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A value that should satisfy a structural invariant does not
/// (e.g. a covariance with a clearly negative determinant).
class InvariantError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// The data carry no information about the requested parameter.
class UnidentifiableError : public Error {
 public:
  using Error::Error;
};

class FitFailureError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration. `field` names the offending JSON path.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace osc_echo
