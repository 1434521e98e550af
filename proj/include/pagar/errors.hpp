#pragma once

#include <stdexcept>
#include <string>

namespace pagar {

// base of every library error; the CLI maps subclasses onto exit codes
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error { using Error::Error; };
struct InputError : Error { using Error::Error; };
struct BudgetExceeded : Error { using Error::Error; };
struct InfeasibleTrajectory : Error { using Error::Error; };
struct SolveFailure : Error { using Error::Error; };
struct NonConvergence : Error { using Error::Error; };
struct EmptyRewardSet : Error { using Error::Error; };
struct AssumptionViolated : Error { using Error::Error; };
struct DegenerateDenominator : Error { using Error::Error; };
struct InfeasibleLP : Error { using Error::Error; };
struct EmptyBatch : Error { using Error::Error; };
struct RatioOverflow : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };

}  // namespace pagar
