#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "itrace/lanczos.hpp"
#include "itrace/problem.hpp"
#include "itrace/tridiag.hpp"

namespace itrace {

/// Inexactness parameters (xi1, xi2, xi3) governing when a reduced-space
/// trust-region solution is accurate enough in the full space.
struct InexactnessParams {
  double xi1 = 1.0;   // > 0
  double xi2 = 0.1;   // in (0,1)
  double xi3 = 1e6;   // > 0
};

/// Reduced-space inexactness test: accept when
///   mu <= xi1 ||t||^2, or
///   mu <= xi2 min(1,||t||) gamma0 and 1 <= xi3 min(1,||t||) ||T+lambda I||.
/// The second branch can be disabled without affecting correctness.
inline bool check_inexact_termination(double mu, double t_norm, double gamma0,
                                      double opnorm_TlI,
                                      const InexactnessParams& params,
                                      bool branch2_enabled = true) {
  if (mu <= params.xi1 * t_norm * t_norm) return true;
  if (!branch2_enabled) return false;
  const double m1 = std::min(1.0, t_norm);
  return mu <= params.xi2 * m1 * gamma0 && 1.0 <= params.xi3 * m1 * opnorm_TlI;
}

inline double opnorm_shifted(const TridiagSym& T, double lambda) {
  const auto [omega_min, omega_max] = extreme_eigenvalues(T);
  return std::max(std::abs(omega_min + lambda), std::abs(omega_max + lambda));
}

struct TltrOutput {
  LanczosState state;
  SubproblemSolution solution;
  double mu = 0.0;
  int j = 0;
};

/// Truncated Lanczos trust-region loop: grow the Krylov subspace one
/// Hessian-vector product at a time, solve the reduced trust-region
/// subproblem at each order, and stop once the inexactness test passes.
/// Terminates by j = n-1 at the latest through the breakdown path mu = 0.
inline TltrOutput run_tltr(const ObjectiveOracle& oracle, Counters& counters,
                           const VectorXd& x, const VectorXd& g, double delta,
                           const InexactnessParams& params,
                           bool branch2_enabled = true) {
  const double gamma0 = g.norm();
  if (gamma0 <= 0.0) throw ZeroGradient("run_tltr requires a nonzero gradient");

  const VectorXd q0 = g / gamma0;
  LanczosState state(g, hess_vec_counted(oracle, counters, x, q0));

  const int n = oracle.n;
  for (;;) {
    SubproblemSolution sol = solve_trust_region(state.T(), gamma0, delta);
    const double mu = residual_norm(state, sol.t);
    const double opnorm = opnorm_shifted(state.T(), sol.lambda);
    if (check_inexact_termination(mu, sol.t.norm(), gamma0, opnorm, params,
                                  branch2_enabled)) {
      const int j_final = state.j();
      return TltrOutput{std::move(state), std::move(sol), mu, j_final};
    }
    if (state.breakdown() || state.j() >= n - 1) {
      throw InternalInvariantViolation(
          "TLTR failed to terminate by the breakdown path");
    }
    const VectorXd v = state.next_direction();
    state.expand(hess_vec_counted(oracle, counters, x, v));
  }
}

}  // namespace itrace
