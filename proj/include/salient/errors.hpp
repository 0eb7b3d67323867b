#pragma once

#include <stdexcept>
#include <string>

namespace salient {

// Failure modes of the public API surface. Loaders and clients throw
// `Error`; callers branch on `code()` rather than parsing messages.
enum class ErrorCode {
  MalformedLine,
  DuplicateId,
  InvalidLabel,
  OutOfRange,
  Empty,
  EmptyLabels,
  NoPairs,
  MismatchedSets,
  ConstantInput,
  UnequalRaters,
  NotFound,
  Network,
  Parse,
  OffsetInvalid,
  NoTargets,
  WrongStrategy,
  AlreadyResolved,
  InvalidConfig,
  Io,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine: return "MALFORMED_LINE";
    case ErrorCode::DuplicateId: return "DUPLICATE_ID";
    case ErrorCode::InvalidLabel: return "INVALID_LABEL";
    case ErrorCode::OutOfRange: return "OUT_OF_RANGE";
    case ErrorCode::Empty: return "EMPTY";
    case ErrorCode::EmptyLabels: return "EMPTY_LABELS";
    case ErrorCode::NoPairs: return "NO_PAIRS";
    case ErrorCode::MismatchedSets: return "MISMATCHED_SETS";
    case ErrorCode::ConstantInput: return "CONSTANT_INPUT";
    case ErrorCode::UnequalRaters: return "UNEQUAL_RATERS";
    case ErrorCode::NotFound: return "NOT_FOUND";
    case ErrorCode::Network: return "NETWORK";
    case ErrorCode::Parse: return "PARSE";
    case ErrorCode::OffsetInvalid: return "OFFSET_INVALID";
    case ErrorCode::NoTargets: return "NO_TARGETS";
    case ErrorCode::WrongStrategy: return "WRONG_STRATEGY";
    case ErrorCode::AlreadyResolved: return "ALREADY_RESOLVED";
    case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::Io: return "IO";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace salient
