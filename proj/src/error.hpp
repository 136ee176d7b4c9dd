#pragma once

#include <stdexcept>
#include <string>

namespace seqcombine {

enum class ErrorCode {
  NotPositiveDefinite,
  DimensionMismatch,
  DegenerateDirection,
  TrivialCombination,
  NonMonotoneInformation,
  InvalidSpec,
  RestrictionExceedsFollowup,
  ArmMissing,
  DegenerateArm,
  LookOrder,
  InsufficientData,
  ConfigInvalid,
  SchemaError,
  StateMismatch,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

// Process exit status for a failure of this kind: 2 config, 3 data, 4 numeric.
int exit_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace seqcombine
