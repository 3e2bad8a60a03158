#pragma once

#include <stdexcept>
#include <string>

namespace rtraj {

/// Bad user input: malformed files, out-of-range options, mismatched
/// configuration. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Structural mismatch between tensors or parameter sets.
class ShapeError : public ValidationError {
  public:
    explicit ShapeError(const std::string& what) : ValidationError(what) {}
};

/// Runtime numeric failure: NaN gradients, log of non-positive values,
/// diverging losses. Maps to CLI exit code 2.
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// File and serialization failures (corrupt or truncated files, version
/// mismatches, unwritable paths). Maps to CLI exit code 2.
class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rtraj
