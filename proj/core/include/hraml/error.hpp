#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hraml {

enum class ErrorCode {
  ParseError,
  InvalidLabel,
  EmptyDataset,
  DegenerateSplit,
  LengthMismatch,
  DegenerateTargets,
  BadArchitecture,
  DimensionMismatch,
  TraceMismatch,
  IoError,
  SchemaError,
  TooFewSamples,
  EmptyPairs,
  Diverged,
  SingularSystem,
  EmptyIndex,
  ShapeMismatch,
  NoValidSamples,
  NotADistribution,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can branch on the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class DivergedError : public Error {
 public:
  DivergedError(std::int64_t step, const std::string& message)
      : Error(ErrorCode::Diverged, message + " at step " + std::to_string(step)), step_(step) {}

  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

}  // namespace hraml
