#pragma once

#include <stdexcept>
#include <string>

namespace rigoletto {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (bad shape, empty set, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Input is structurally valid but numerically degenerate (e.g. zero trace).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// A computation would overflow double precision.
class NumericOverflow : public Error {
 public:
  using Error::Error;
};

/// A linear system or decomposition could not be solved reliably.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

/// File-system failure; carries the offending path.
class IoError : public Error {
 public:
  IoError(const std::string& message, std::string path)
      : Error(message + ": " + path), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Bad or unknown configuration entry; carries the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& message, std::string key)
      : Error(message + ": '" + key + "'"), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace rigoletto
