#pragma once

#include <stdexcept>
#include <string>

namespace tdlab {

// Instance/model problems: malformed kernels, singular systems, coverage gaps.
// The CLI maps these to exit code 3.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public ModelError {
 public:
  using ModelError::ModelError;
};

class NoUniqueStationaryDistribution : public ModelError {
 public:
  using ModelError::ModelError;
};

class SingularSystem : public ModelError {
 public:
  using ModelError::ModelError;
};

// theta~* exists only as an affine family (e.g. d > |S|).
class NonUniqueSolution : public ModelError {
 public:
  using ModelError::ModelError;
};

// pi(a|s) > 0 where pi_b(a|s) = 0: importance ratio undefined.
class CoverageViolation : public ModelError {
 public:
  using ModelError::ModelError;
};

// Bad configuration values or syntax (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem failures, message carries the OS reason verbatim (exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tdlab
