#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pt {

enum class ErrorCode {
  InvalidSize,
  InvalidArgument,
  EmptyInput,
  NoOverlap,
  DegenerateBox,
  UnknownImage,
  StageUnavailable,
  DimensionMismatch,
  UndefinedNorm,
  Parse,
  Validation,
  DuplicateId,
  MissingFeature,
  EmptyIndex,
  AnnotationUnavailable,
  UnknownClass,
  Io,
  Config,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Every failure raised by parttransfer carries a code
/// so callers (the CLI, batch drivers) can branch on the kind of failure
/// without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace pt
