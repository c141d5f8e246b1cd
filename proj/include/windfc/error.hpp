#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace windfc {

enum class ErrorCode {
  // dataio
  MissingColumn,
  MalformedRow,
  DuplicateRow,
  UnknownRole,
  InvalidSchema,
  // preprocess
  AllMissing,
  UnfittedRole,
  RangeTooShort,
  InsufficientDays,
  InvalidArgument,
  // autodiff
  ShapeMismatch,
  ElementCountMismatch,
  NonFiniteInput,
  EmptyMask,
  NotScalar,
  DetachedLoss,
  // train
  NoTrainingData,
  NonFiniteLoss,
  CorruptCheckpoint,
  VersionMismatch,
  // postprocess
  EmptySlot,
  ProfileNotFitted,
  // evaluate
  TurbineSetMismatch,
  // io / config
  IoError,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace windfc
