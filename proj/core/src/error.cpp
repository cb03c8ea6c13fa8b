#include "compsnn/error.hpp"

namespace compsnn {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::SeedOutsideMask: return "SeedOutsideMask";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::IdOutOfRange: return "IdOutOfRange";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EvenKernel: return "EvenKernel";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::NonPositiveEpsilon: return "NonPositiveEpsilon";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::UnreachableCheckpoint: return "UnreachableCheckpoint";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::OrderMismatch: return "OrderMismatch";
    case ErrorCode::ChannelOutOfRange: return "ChannelOutOfRange";
    case ErrorCode::EmptyMap: return "EmptyMap";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace compsnn
