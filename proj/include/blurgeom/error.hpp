#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blurgeom {

enum class ErrorCode {
  DimensionMismatch,
  NonFiniteInput,
  InvalidArgument,
  DegeneratePlane,
  RecomputedWithoutUnembed,
  TopTwoChanged,
  ProbabilityOutOfRange,
  ZeroVector,
  EmptySet,
  InsufficientPoints,
  TooManyItems,
  NoEvalData,
  AntipodalTarget,
  // dataset loader
  IoError,
  MalformedHeader,
  UnsupportedVersion,
  Truncated,
  TrailingBytes,
  RangeError,
  OrderingError,
  TokenError,
  NormError,
  LabelGrammar,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace blurgeom
