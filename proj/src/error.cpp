#include "mdvg/error.hpp"

namespace mdvg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::MarkerCollision: return "MarkerCollision";
    case ErrorCode::ContentMismatch: return "ContentMismatch";
    case ErrorCode::UnbalancedMarkers: return "UnbalancedMarkers";
    case ErrorCode::EmptySpan: return "EmptySpan";
    case ErrorCode::TrailingContent: return "TrailingContent";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedVocab: return "MalformedVocab";
    case ErrorCode::MarkerNotInVocab: return "MarkerNotInVocab";
    case ErrorCode::SessionDone: return "SessionDone";
    case ErrorCode::DisallowedToken: return "DisallowedToken";
    case ErrorCode::KeyMismatch: return "KeyMismatch";
    case ErrorCode::InvalidPrediction: return "InvalidPrediction";
    case ErrorCode::ViewMismatch: return "ViewMismatch";
    case ErrorCode::UnbalancedBrackets: return "UnbalancedBrackets";
    case ErrorCode::LeafAlignmentFailure: return "LeafAlignmentFailure";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::MissingCategory: return "MissingCategory";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::SameDataset: return "SameDataset";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::UnknownSession: return "UnknownSession";
  }
  return "Unknown";
}

}  // namespace mdvg
