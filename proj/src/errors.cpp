#include "adot/errors.hpp"

namespace adot {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::InvalidTree: return "InvalidTree";
    case ErrorCode::ZeroProbBranch: return "ZeroProbBranch";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::MarginalMismatch: return "MarginalMismatch";
    case ErrorCode::MissingCostEntry: return "MissingCostEntry";
    case ErrorCode::HorizonMismatch: return "HorizonMismatch";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::DualVerificationFailed: return "DualVerificationFailed";
    case ErrorCode::CertificateFailed: return "CertificateFailed";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::NotMartingaleMarginal: return "NotMartingaleMarginal";
    case ErrorCode::IncompleteMarket: return "IncompleteMarket";
    case ErrorCode::EmptySupport: return "EmptySupport";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) noexcept {
  return code == ErrorCode::NumericalFailure ||
         code == ErrorCode::DualVerificationFailed ||
         code == ErrorCode::CertificateFailed;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message),
      code_(code) {}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace adot
