#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmw2s {

enum class ErrorCode {
  kInvalidIndex,
  kWindowOutOfBounds,
  kInvalidConfig,
  kEmptySignal,
  kModalityMissing,
  kNonDyadic,
  kShortfall,
  kNoModality,
  kAlignmentNotApplicable,
  kIncompatible,
  kShapeMismatch,
  kFormat,
  kIo,
  kUsage,
  kLocked,
};

constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidIndex: return "invalid_index";
    case ErrorCode::kWindowOutOfBounds: return "window_out_of_bounds";
    case ErrorCode::kInvalidConfig: return "invalid_config";
    case ErrorCode::kEmptySignal: return "empty_signal";
    case ErrorCode::kModalityMissing: return "modality_missing";
    case ErrorCode::kNonDyadic: return "non_dyadic";
    case ErrorCode::kShortfall: return "shortfall";
    case ErrorCode::kNoModality: return "no_modality";
    case ErrorCode::kAlignmentNotApplicable: return "alignment_not_applicable";
    case ErrorCode::kIncompatible: return "incompatible";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kUsage: return "usage";
    case ErrorCode::kLocked: return "locked";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace mmw2s
