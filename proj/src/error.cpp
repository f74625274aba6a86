#include "tabletop/error.hpp"

namespace tabletop {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::FewerThanFourPairs: return "FewerThanFourPairs";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::PointAtInfinity: return "PointAtInfinity";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::NonInvertibleHomography: return "NonInvertibleHomography";
    case ErrorCode::EmptyDirtMask: return "EmptyDirtMask";
    case ErrorCode::MaskOutsideTable: return "MaskOutsideTable";
    case ErrorCode::AmbiguousColor: return "AmbiguousColor";
    case ErrorCode::DegenerateFrameGeometry: return "DegenerateFrameGeometry";
    case ErrorCode::NonSpdCovariance: return "NonSpdCovariance";
    case ErrorCode::SingularPrecisionSum: return "SingularPrecisionSum";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::CollapsedComponent: return "CollapsedComponent";
    case ErrorCode::UntrainedModel: return "UntrainedModel";
    case ErrorCode::ParamsOutOfBounds: return "ParamsOutOfBounds";
    case ErrorCode::ZeroInitialArea: return "ZeroInitialArea";
    case ErrorCode::ZeroInitialDistance: return "ZeroInitialDistance";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

void rethrow_with_context(const Error& e, const std::string& context) {
  throw Error(e.code(), context + ": " + e.what());
}

}  // namespace tabletop
