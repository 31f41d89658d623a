#pragma once

#include <stdexcept>
#include <string>

namespace keratoflow {

/// Bad input: malformed records, out-of-range labels, shape mismatches.
/// The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EncodingError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Failures while running: diverged training, stale caches, I/O.
/// The CLI maps these to exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ContractViolation : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class IoError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class TrainingError : public RuntimeFailure {
 public:
  TrainingError(const std::string& what, long epoch, long layer)
      : RuntimeFailure(what + " (epoch " + std::to_string(epoch) + ", layer " +
                       std::to_string(layer) + ")"),
        epoch_(epoch),
        layer_(layer) {}

  long epoch() const noexcept { return epoch_; }
  long layer() const noexcept { return layer_; }

 private:
  long epoch_;
  long layer_;
};

}  // namespace keratoflow
