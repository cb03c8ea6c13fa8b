#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace compsnn {

/// Failure categories reported by the library. Each public operation throws
/// `compsnn::Error` carrying one of these codes.
enum class ErrorCode {
  TooShort,
  NonMonotonicTime,
  LengthMismatch,
  InvalidArgument,
  UnknownCategory,
  MissingField,
  EmptyInput,
  AllZero,
  SeedOutsideMask,
  OutOfBounds,
  IdOutOfRange,
  NotSymmetric,
  NoConvergence,
  DimensionMismatch,
  ShapeMismatch,
  EvenKernel,
  NonFiniteGradient,
  NonPositiveEpsilon,
  UnknownKind,
  UnreachableCheckpoint,
  DivergedLoss,
  OrderMismatch,
  ChannelOutOfRange,
  EmptyMap,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace compsnn
