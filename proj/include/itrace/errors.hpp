#pragma once

#include <stdexcept>
#include <string>

namespace itrace {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Oracle evaluation failures.
struct NonFiniteObjective : SolverError { using SolverError::SolverError; };
struct NonFiniteGradient : SolverError { using SolverError::SolverError; };
struct NonFiniteHessVec : SolverError { using SolverError::SolverError; };
struct UnknownProblem : SolverError { using SolverError::SolverError; };

// Reduced-space subproblem failures.
struct NotPositiveDefinite : SolverError { using SolverError::SolverError; };
struct InvalidGradientNorm : SolverError { using SolverError::SolverError; };
struct SubproblemStall : SolverError { using SolverError::SolverError; };
struct BracketError : SolverError { using SolverError::SolverError; };

// Lanczos process failures.
struct ZeroGradient : SolverError { using SolverError::SolverError; };
struct BreakdownExpand : SolverError { using SolverError::SolverError; };
struct DimensionError : SolverError { using SolverError::SolverError; };

// Outer-loop failures.
struct DegenerateStep : SolverError { using SolverError::SolverError; };
struct FdsStall : SolverError { using SolverError::SolverError; };
struct ProblemTooLarge : SolverError { using SolverError::SolverError; };
struct InternalInvariantViolation : SolverError { using SolverError::SolverError; };

// Benchmark harness failures.
struct EmptyComparison : SolverError { using SolverError::SolverError; };
struct IoError : SolverError { using SolverError::SolverError; };

}  // namespace itrace
