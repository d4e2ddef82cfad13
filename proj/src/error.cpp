#include "slscan/error.hpp"

namespace slscan {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::MalformedCode: return "MalformedCode";
    case ErrorCode::ClippingError: return "ClippingError";
    case ErrorCode::StackMismatch: return "StackMismatch";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::DegenerateMotion: return "DegenerateMotion";
    case ErrorCode::InsufficientSupport: return "InsufficientSupport";
    case ErrorCode::InconsistentViews: return "InconsistentViews";
    case ErrorCode::DegenerateRays: return "DegenerateRays";
    case ErrorCode::MissingAxis: return "MissingAxis";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::MissingNormals: return "MissingNormals";
    case ErrorCode::MissingProvenance: return "MissingProvenance";
    case ErrorCode::MissingRig: return "MissingRig";
    case ErrorCode::EmptyPairs: return "EmptyPairs";
    case ErrorCode::NoCorrespondences: return "NoCorrespondences";
    case ErrorCode::StepFailed: return "StepFailed";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedBody: return "TruncatedBody";
    case ErrorCode::UnsupportedMaxval: return "UnsupportedMaxval";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::MalformedBody: return "MalformedBody";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

}  // namespace slscan
