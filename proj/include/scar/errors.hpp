#pragma once

#include <stdexcept>
#include <string>

namespace scar {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed CLI usage or config contents (unknown keys, bad values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Data that violates a documented contract (out-of-bounds points,
// mismatched shapes, bad manifests).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Files that are missing, truncated or carry the wrong format tag.
class LoadError : public Error {
 public:
  using Error::Error;
};

// Non-finite values during optimization.
class NumericsError : public Error {
 public:
  using Error::Error;
};

}  // namespace scar
