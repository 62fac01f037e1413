#pragma once

#include <stdexcept>
#include <string>

namespace oti {

enum class ErrorKind {
  UnreadableFile,
  UnsupportedFormat,
  MalformedHeader,
  IntensityOutOfRange,
  MultiChannelMask,
  IoFailure,
  DuplicateImageId,
  ShapeMismatch,
  MissingOutcome,
  DuplicateOutcome,
  MissingScore,
  MissingPayload,
  InsufficientData,
  SpecInfeasible,
  DegenerateCorpus,
  AlreadyMisclassified,
  NotLinear,
  RefusingOverwrite,
  InvalidArgument,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the whole toolkit; the kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  /// True for filesystem-level failures (CLI exit code 2); everything else is
  /// a validation failure (exit code 1).
  bool is_io() const {
    return kind_ == ErrorKind::UnreadableFile || kind_ == ErrorKind::IoFailure;
  }

 private:
  ErrorKind kind_;
};

}  // namespace oti
