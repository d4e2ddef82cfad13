#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slscan {

enum class ErrorCode {
  InvalidArgument,
  IoError,
  // geometry
  BehindCamera,
  NoConvergence,
  // codec
  OutOfRange,
  MalformedCode,
  ClippingError,
  StackMismatch,
  // calibration
  Degenerate,
  DegenerateMotion,
  InsufficientSupport,
  InconsistentViews,
  // triangulation
  DegenerateRays,
  MissingAxis,
  // registration
  DegenerateConfiguration,
  TooFewPoints,
  MissingNormals,
  MissingProvenance,
  MissingRig,
  EmptyPairs,
  NoCorrespondences,
  StepFailed,
  // io
  MalformedHeader,
  TruncatedBody,
  UnsupportedMaxval,
  CountMismatch,
  MalformedBody,
  SchemaViolation,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so
// callers (the CLI in particular) can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  // what() without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace slscan
