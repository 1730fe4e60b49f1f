#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfusion {

enum class ErrorCode {
  kPointBehindCamera,
  kFullyBehindCamera,
  kDegeneratePosition,
  kInvalidDepth,
  kDegenerateBox,
  kDomain,
  kShapeMismatch,
  kMissingSecondary,
  kInvalidArgument,
  kParse,
  kIo,
};

inline constexpr std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kPointBehindCamera: return "PointBehindCamera";
    case ErrorCode::kFullyBehindCamera: return "FullyBehindCamera";
    case ErrorCode::kDegeneratePosition: return "DegeneratePosition";
    case ErrorCode::kInvalidDepth: return "InvalidDepth";
    case ErrorCode::kDegenerateBox: return "DegenerateBox";
    case ErrorCode::kDomain: return "DomainError";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kMissingSecondary: return "MissingSecondary";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

// Every failure raised by the library carries a machine-readable code; the CLI
// maps codes onto exit-status categories.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ToString(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix, for re-raising with more context.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace cfusion
