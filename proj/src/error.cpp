#include "windfc/error.hpp"

namespace windfc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicateRow: return "DuplicateRow";
    case ErrorCode::UnknownRole: return "UnknownRole";
    case ErrorCode::InvalidSchema: return "InvalidSchema";
    case ErrorCode::AllMissing: return "AllMissing";
    case ErrorCode::UnfittedRole: return "UnfittedRole";
    case ErrorCode::RangeTooShort: return "RangeTooShort";
    case ErrorCode::InsufficientDays: return "InsufficientDays";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ElementCountMismatch: return "ElementCountMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::NotScalar: return "NotScalar";
    case ErrorCode::DetachedLoss: return "DetachedLoss";
    case ErrorCode::NoTrainingData: return "NoTrainingData";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::EmptySlot: return "EmptySlot";
    case ErrorCode::ProfileNotFitted: return "ProfileNotFitted";
    case ErrorCode::TurbineSetMismatch: return "TurbineSetMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace windfc
