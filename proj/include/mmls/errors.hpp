/**
 * @file errors.hpp
 * @brief Error codes and the exception type shared by all mmls components.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace mmls {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kRankDeficient,
  kEmptyInput,
  kNonFiniteInput,
  kOutsideReach,
  kSigmaExceedsReach,
  kBoundingBoxFailure,
  kInsufficientSamples,
  kIllConditioned,
  kEmptyRoi,
  kDegenerateRoi,
  kInvalidDomain,
  kZeroDirection,
  kProjectionFailed,
  kParseError,
  kInconsistentWidth,
  kIoError,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kOutsideReach: return "OutsideReach";
    case ErrorCode::kSigmaExceedsReach: return "SigmaExceedsReach";
    case ErrorCode::kBoundingBoxFailure: return "BoundingBoxFailure";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kIllConditioned: return "IllConditioned";
    case ErrorCode::kEmptyRoi: return "EmptyROI";
    case ErrorCode::kDegenerateRoi: return "DegenerateROI";
    case ErrorCode::kInvalidDomain: return "InvalidDomain";
    case ErrorCode::kZeroDirection: return "ZeroDirection";
    case ErrorCode::kProjectionFailed: return "ProjectionFailed";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInconsistentWidth: return "InconsistentWidth";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

  /// True for failures of the estimation pipeline itself, as opposed to
  /// malformed inputs or I/O problems. Drives CLI exit-code mapping.
  bool is_estimator_failure() const {
    switch (code_) {
      case ErrorCode::kRankDeficient:
      case ErrorCode::kOutsideReach:
      case ErrorCode::kBoundingBoxFailure:
      case ErrorCode::kInsufficientSamples:
      case ErrorCode::kIllConditioned:
      case ErrorCode::kEmptyRoi:
      case ErrorCode::kDegenerateRoi:
      case ErrorCode::kInvalidDomain:
      case ErrorCode::kZeroDirection:
      case ErrorCode::kProjectionFailed:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

}  // namespace mmls
