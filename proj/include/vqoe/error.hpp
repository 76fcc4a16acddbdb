#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vqoe {

enum class ErrorCode {
  // session_model
  TooShort,
  BadVersion,
  // ingest
  BadMagic,
  UnsupportedLinkType,
  Truncated,
  Empty,
  BadHeader,
  BadRow,
  DuplicateSecond,
  SessionFiltered,
  NoOverlap,
  // media_classifier
  OverlappingRanges,
  MissingClass,
  LengthMismatch,
  // frame_assembly / features
  MissingRtp,
  // forest
  EmptyDataset,
  NonFiniteInput,
  DimensionMismatch,
  TooFewGroups,
  FeatureMismatch,
  BadModel,
  // evaluation
  UnknownClass,
  AllExcluded,
  // synth
  InvalidProfile,
  // generic
  InvalidArgument,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::BadVersion: return "BadVersion";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedLinkType: return "UnsupportedLinkType";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::BadRow: return "BadRow";
    case ErrorCode::DuplicateSecond: return "DuplicateSecond";
    case ErrorCode::SessionFiltered: return "SessionFiltered";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::OverlappingRanges: return "OverlappingRanges";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingRtp: return "MissingRtp";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooFewGroups: return "TooFewGroups";
    case ErrorCode::FeatureMismatch: return "FeatureMismatch";
    case ErrorCode::BadModel: return "BadModel";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::AllExcluded: return "AllExcluded";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

// All library failures surface as vqoe::Error; code() identifies the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vqoe
