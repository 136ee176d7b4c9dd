#include "error.hpp"

namespace seqcombine {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::TrivialCombination: return "TrivialCombination";
    case ErrorCode::NonMonotoneInformation: return "NonMonotoneInformation";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::RestrictionExceedsFollowup: return "RestrictionExceedsFollowup";
    case ErrorCode::ArmMissing: return "ArmMissing";
    case ErrorCode::DegenerateArm: return "DegenerateArm";
    case ErrorCode::LookOrder: return "LookOrder";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::StateMismatch: return "StateMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

int exit_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::InvalidSpec:
      return 2;
    case ErrorCode::SchemaError:
    case ErrorCode::StateMismatch:
    case ErrorCode::InsufficientData:
    case ErrorCode::IoError:
    case ErrorCode::ArmMissing:
    case ErrorCode::RestrictionExceedsFollowup:
      return 3;
    default:
      return 4;
  }
}

}  // namespace seqcombine
