#include "parttransfer/error.hpp"

namespace pt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidSize: return "invalid-size";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::NoOverlap: return "no-overlap";
    case ErrorCode::DegenerateBox: return "degenerate-box";
    case ErrorCode::UnknownImage: return "unknown-image";
    case ErrorCode::StageUnavailable: return "stage-unavailable";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::UndefinedNorm: return "undefined-norm";
    case ErrorCode::Parse: return "parse-error";
    case ErrorCode::Validation: return "validation-error";
    case ErrorCode::DuplicateId: return "duplicate-id";
    case ErrorCode::MissingFeature: return "missing-feature";
    case ErrorCode::EmptyIndex: return "empty-index";
    case ErrorCode::AnnotationUnavailable: return "annotation-unavailable";
    case ErrorCode::UnknownClass: return "unknown-class";
    case ErrorCode::Io: return "io-error";
    case ErrorCode::Config: return "config-error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace pt
