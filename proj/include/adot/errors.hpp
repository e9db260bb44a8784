#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adot {

enum class ErrorCode {
  MalformedInput,
  InvalidTree,
  ZeroProbBranch,
  OutOfRange,
  MarginalMismatch,
  MissingCostEntry,
  HorizonMismatch,
  Infeasible,
  NumericalFailure,
  DualVerificationFailed,
  CertificateFailed,
  PreconditionViolation,
  NotMartingaleMarginal,
  IncompleteMarket,
  EmptySupport,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Input-side errors map to exit status 1, numerical ones to 2.
bool is_numerical(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace adot
