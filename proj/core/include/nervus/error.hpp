#pragma once

#include <stdexcept>
#include <string>

namespace nervus {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents that do not fit the operation (dimension mismatch, bad reshape,
/// kernel larger than the padded input, ...).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf in an input, a forward value, a gradient or a loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed external data: manifests, image payloads, checkpoint files.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Manifest content that violates the manifest contract.
class ManifestError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Invalid run configuration (unknown flag, incompatible task/criterion, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nervus
