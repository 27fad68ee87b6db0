#pragma once

#include <stdexcept>
#include <string>

namespace recap {

// Exception hierarchy used throughout the core. The C API maps each type to a
// distinct status code, so keep the set small and stable.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument or invariant violation detected on input. `field()` names the
/// offending parameter when one applies.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message, std::string field = {})
      : Error(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A labeled set that contains only one class cannot be balanced or trained on.
class DegenerateDatasetError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

enum class LoadFailure {
  kMissingManifest,
  kCorruptManifest,
  kMissingImage,
  kDimensionMismatch,
  kCorruptFile,
};

class LoadError : public Error {
 public:
  LoadError(LoadFailure kind, const std::string& message) : Error(message), kind_(kind) {}
  LoadFailure kind() const noexcept { return kind_; }

 private:
  LoadFailure kind_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient during optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

class MissingArtifactError : public Error {
 public:
  MissingArtifactError(const std::string& artifact, const std::string& message)
      : Error(message), artifact_(artifact) {}
  const std::string& artifact() const noexcept { return artifact_; }

 private:
  std::string artifact_;
};

class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& message)
      : Error("stage '" + stage + "' failed: " + message), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace recap
