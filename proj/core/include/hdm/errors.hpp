#pragma once

#include <stdexcept>
#include <string>

namespace hdm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad caller-supplied data: shapes, ranges, missing files.
struct InputError : Error {
  using Error::Error;
};

// Invalid or inconsistent configuration values.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed serialized data (saliency files, model files, manifests).
struct FormatError : Error {
  using Error::Error;
};

// A classifier that cannot do what was asked of it (e.g. no input gradients).
struct CapabilityError : Error {
  using Error::Error;
};

// Non-finite values or failed numeric procedures.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace hdm
