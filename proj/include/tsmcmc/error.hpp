#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tsmcmc {

enum class ErrorCode {
  InvalidArgument,
  DegenerateDimension,
  DimensionMismatch,
  NonFiniteState,
  NonFiniteValue,
  ParseError,
  MissingColumn,
  SeriesTooShort,
  ZeroRange,
  InsufficientData,
  SingularDesign,
  ContextTooShort,
  SpawnError,
  HandshakeMismatch,
  Timeout,
  ProtocolError,
  ChildExit,
  InvalidDistribution,
  EmptySubset,
  ZeroVariance,
  TooFewPoints,
  TooFewWindows,
  ConfigInvalid,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library. The code identifies the failure
/// class; `step` is filled in when the failure happened inside a sequential
/// run (corrector or rollout) and names the output index being produced.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return to_string(code_); }
  const std::string& message() const noexcept { return message_; }
  std::optional<std::size_t> step() const noexcept { return step_; }

  /// Copy of this error tagged with the step index (keeps an existing tag).
  Error at_step(std::size_t step) const;

 private:
  ErrorCode code_;
  std::string message_;
  std::optional<std::size_t> step_;
};

}  // namespace tsmcmc
