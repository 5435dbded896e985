#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mdvg {

enum class ErrorCode {
  MalformedFile,
  InvariantViolation,
  MarkerCollision,
  ContentMismatch,
  UnbalancedMarkers,
  EmptySpan,
  TrailingContent,
  IndexOutOfRange,
  IoError,
  MalformedVocab,
  MarkerNotInVocab,
  SessionDone,
  DisallowedToken,
  KeyMismatch,
  InvalidPrediction,
  ViewMismatch,
  UnbalancedBrackets,
  LeafAlignmentFailure,
  UnknownCategory,
  MissingCategory,
  BadK,
  SameDataset,
  BadRequest,
  UnknownSession,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; `code()` is the
// machine-readable part, `what()` the human-readable one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mdvg
