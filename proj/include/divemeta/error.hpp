#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace divemeta {

enum class ErrorCode {
  EmptyInput,
  NonPositiveSize,
  NonFiniteValue,
  QuartileOrderViolation,
  DuplicateStudyId,
  LengthMismatch,
  DominantStudy,
  InvalidWeights,
  InvalidAlpha,
  ZeroSE,
  NonPositiveVariance,
  NeedTwoStudies,
  InvalidParams,
  ProbabilityOutOfRange,
  ZeroDensityAtMedian,
  UnsupportedQuantiles,
  DegenerateQuartiles,
  OptimizerDiverged,
  AllFamiliesFailed,
  NotQeEligible,
  InsufficientQeEligibleStudies,
  InvalidScenario,
  InfeasibleBaseline,
  ZeroTruthDenominator,
  ReplicateFailed,
  MalformedCsv,
  HeaderMismatch,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace divemeta
