#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nod {

enum class ErrorCode {
  InvalidArgument,
  GridMismatch,
  NonSymmetricSpectrum,
  FrequencyOutOfRange,
  TiedMaximum,
  NonFiniteProfile,
  Diverged,
  NonPositivePeak,
  MatchFailure,
  PoleEvaluation,
  UnstableLinearization,
  NewtonDivergence,
  OverlappingGaps,
  QuasiStaticViolation,
  ParseError,
  ValidationFailed,
};

/// Coarse grouping used for process exit codes.
enum class ErrorCategory { Config, Model, Numerical };

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NonSymmetricSpectrum: return "NonSymmetricSpectrum";
    case ErrorCode::FrequencyOutOfRange: return "FrequencyOutOfRange";
    case ErrorCode::TiedMaximum: return "TiedMaximum";
    case ErrorCode::NonFiniteProfile: return "NonFiniteProfile";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::NonPositivePeak: return "NonPositivePeak";
    case ErrorCode::MatchFailure: return "MatchFailure";
    case ErrorCode::PoleEvaluation: return "PoleEvaluation";
    case ErrorCode::UnstableLinearization: return "UnstableLinearization";
    case ErrorCode::NewtonDivergence: return "NewtonDivergence";
    case ErrorCode::OverlappingGaps: return "OverlappingGaps";
    case ErrorCode::QuasiStaticViolation: return "QuasiStaticViolation";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
  }
  return "Unknown";
}

constexpr ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::FrequencyOutOfRange:
    case ErrorCode::ParseError:
      return ErrorCategory::Config;
    case ErrorCode::Diverged:
    case ErrorCode::MatchFailure:
    case ErrorCode::PoleEvaluation:
    case ErrorCode::NewtonDivergence:
    case ErrorCode::NonSymmetricSpectrum:
      return ErrorCategory::Numerical;
    default:
      return ErrorCategory::Model;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nod
