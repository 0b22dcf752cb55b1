#include "tsmcmc/error.hpp"

namespace tsmcmc {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateDimension: return "DegenerateDimension";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::ZeroRange: return "ZeroRange";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::ContextTooShort: return "ContextTooShort";
    case ErrorCode::SpawnError: return "SpawnError";
    case ErrorCode::HandshakeMismatch: return "HandshakeMismatch";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::ChildExit: return "ChildExit";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::EmptySubset: return "EmptySubset";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::TooFewWindows: return "TooFewWindows";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      message_(message) {}

Error Error::at_step(std::size_t step) const {
  if (step_) return *this;
  Error tagged(code_, message_ + " (step " + std::to_string(step) + ")");
  tagged.message_ = message_;
  tagged.step_ = step;
  return tagged;
}

}  // namespace tsmcmc
