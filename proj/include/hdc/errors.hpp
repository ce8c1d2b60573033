#pragma once

#include <stdexcept>
#include <string>

namespace hdc {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A hierarchy violates the binary-tree invariants.
class StructureError : public Error {
 public:
  using Error::Error;
};

/// Malformed, inconsistent or infeasible input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training or prediction failure inside a base classifier.
class ClassifierError : public Error {
 public:
  using Error::Error;
};

}  // namespace hdc
