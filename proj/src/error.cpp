#include "adaskip/error.hpp"

namespace adaskip {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ContractViolation: return "contract violation";
    case ErrorKind::DegenerateInput: return "degenerate input";
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Input: return "input error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Incompatible: return "incompatible profiles";
    case ErrorKind::EmptyStats: return "empty statistics";
    case ErrorKind::IncompleteProfile: return "incomplete profile";
    case ErrorKind::InvalidRatio: return "invalid acceleration ratio";
    case ErrorKind::UndefinedThreshold: return "undefined threshold";
    case ErrorKind::State: return "state error";
    case ErrorKind::PrematureFinalization: return "premature finalization";
    case ErrorKind::InfeasiblePlan: return "infeasible plan";
    case ErrorKind::InvalidK: return "invalid k";
    case ErrorKind::InconsistentPlan: return "inconsistent plan";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

int Error::exit_code() const noexcept {
  switch (kind_) {
    case ErrorKind::Config:
    case ErrorKind::Input:
    case ErrorKind::Parse:
    case ErrorKind::Validation:
    case ErrorKind::Incompatible:
    case ErrorKind::IncompleteProfile:
    case ErrorKind::InvalidRatio:
    case ErrorKind::InfeasiblePlan:
    case ErrorKind::InvalidK:
      return 2;
    default:
      return 3;
  }
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace adaskip
