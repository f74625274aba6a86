#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tabletop {

// Machine-readable failure categories. The CLI prints these verbatim as
// `ERROR <code>: <message>`.
enum class ErrorCode {
  InvalidArgument,
  FewerThanFourPairs,
  DegenerateConfiguration,
  PointAtInfinity,
  NonPositiveScale,
  NonInvertibleHomography,
  EmptyDirtMask,
  MaskOutsideTable,
  AmbiguousColor,
  DegenerateFrameGeometry,
  NonSpdCovariance,
  SingularPrecisionSum,
  InsufficientData,
  CollapsedComponent,
  UntrainedModel,
  ParamsOutOfBounds,
  ZeroInitialArea,
  ZeroInitialDistance,
  MissingFile,
  SchemaVersionMismatch,
  InvariantViolation,
  IoError,
  ParseError,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view code_name() const noexcept { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

// Rethrows `e` with `context` prepended to the message, keeping the code.
[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context);

}  // namespace tabletop
