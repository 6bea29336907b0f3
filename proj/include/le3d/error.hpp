#pragma once

#include <stdexcept>
#include <string>

namespace le3d {

/// Base class for all errors raised by the framework.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value handed to an operation violates its precondition (non-finite, empty, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is missing, malformed or out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The operation conflicts with existing state (duplicate registration, ...).
class ConflictError : public Error {
 public:
  using Error::Error;
};

/// A message could not be routed to a registered handler.
class RoutingError : public Error {
 public:
  using Error::Error;
};

/// A wire payload could not be decoded. `field()` names the first offending field.
class DecodeError : public Error {
 public:
  DecodeError(std::string field, const std::string& what)
      : Error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Lookup of an entity that does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace le3d
