#include "tacos/error.hpp"

namespace tacos {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::UnknownAction: return "UnknownAction";
    case Errc::UnknownUav: return "UnknownUav";
    case Errc::ArityMismatch: return "ArityMismatch";
    case Errc::OutOfBoundsTarget: return "OutOfBoundsTarget";
    case Errc::GoalInObstacle: return "GoalInObstacle";
    case Errc::InvalidPhaseTransition: return "InvalidPhaseTransition";
    case Errc::InfeasibleStep: return "InfeasibleStep";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::MissingReasoning: return "MissingReasoning";
    case Errc::MissingPlan: return "MissingPlan";
    case Errc::MalformedCall: return "MalformedCall";
    case Errc::ValidationFailure: return "ValidationFailure";
    case Errc::CycleBudgetExceeded: return "CycleBudgetExceeded";
    case Errc::Cancelled: return "Cancelled";
    case Errc::BackendUnreachable: return "BackendUnreachable";
    case Errc::BadResponse: return "BadResponse";
    case Errc::NoRuleMatched: return "NoRuleMatched";
    case Errc::TokenLimitExceeded: return "TokenLimitExceeded";
    case Errc::OutOfOrderEntry: return "OutOfOrderEntry";
    case Errc::BusyWithPlan: return "BusyWithPlan";
    case Errc::NotFound: return "NotFound";
    case Errc::InvalidScenario: return "InvalidScenario";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string Error::describe() const {
  std::string out(to_string(code));
  if (!message.empty()) {
    out += ": ";
    out += message;
  }
  return out;
}

TacosError::TacosError(Errc code, const std::string& message)
    : std::runtime_error(Error{code, message}.describe()), code_(code), detail_(message) {}

}  // namespace tacos
