#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "itrace/errors.hpp"
#include "itrace/tridiag.hpp"

namespace itrace {

/// State of the Lanczos process on (H, g): column-orthonormal basis Q of
/// the Krylov subspace span{g, Hg, ..., H^j g}, the projected tridiagonal
/// T = Q'HQ, and the unnormalized next basis vector with its norm.
class LanczosState {
 public:
  LanczosState(const VectorXd& g, const VectorXd& Hq0) {
    gamma0_ = g.norm();
    if (gamma0_ <= 0.0) throw ZeroGradient("Lanczos started at a zero gradient");
    const int n = static_cast<int>(g.size());
    Q_.resize(n, 1);
    Q_.col(0) = g / gamma0_;
    const double theta0 = Q_.col(0).dot(Hq0);
    T_.diag.push_back(theta0);
    y_next_ = Hq0 - theta0 * Q_.col(0);
    finish_residual(Hq0.norm());
  }

  int j() const { return T_.order() - 1; }
  int dim() const { return static_cast<int>(Q_.rows()); }
  const MatrixXd& Q() const { return Q_; }
  const TridiagSym& T() const { return T_; }
  double gamma0() const { return gamma0_; }
  double gamma_next() const { return breakdown_ ? 0.0 : gamma_next_; }
  bool breakdown() const { return breakdown_; }

  /// Direction whose Hessian product the caller must supply to expand.
  VectorXd next_direction() const {
    if (breakdown_) throw BreakdownExpand("no next direction at breakdown");
    return y_next_ / gamma_next_;
  }

  /// Appends the next Lanczos vector. Hq_new must be H * next_direction(),
  /// computed by the caller through the counted oracle.
  void expand(const VectorXd& Hq_new) {
    if (breakdown_) throw BreakdownExpand("expand called at Krylov breakdown");
    VectorXd q = y_next_ / gamma_next_;
    // Full reorthogonalization, classical Gram-Schmidt twice.
    q -= Q_ * (Q_.transpose() * q);
    q -= Q_ * (Q_.transpose() * q);
    q.normalize();

    const int jn = T_.order();
    Q_.conservativeResize(Eigen::NoChange, jn + 1);
    Q_.col(jn) = q;

    const double theta = q.dot(Hq_new);
    T_.offdiag.push_back(gamma_next_);
    T_.diag.push_back(theta);

    y_next_ = Hq_new - theta * q - T_.offdiag.back() * Q_.col(jn - 1);
    finish_residual(Hq_new.norm());
  }

 private:
  void finish_residual(double hq_norm) {
    // Orthogonalize the residual against the stored basis as well; in
    // exact arithmetic these components are zero.
    y_next_ -= Q_ * (Q_.transpose() * y_next_);
    gamma_next_ = y_next_.norm();
    breakdown_ = gamma_next_ <= 1e-12 * std::max(1.0, hq_norm) ||
                 T_.order() >= dim();
  }

  MatrixXd Q_;
  TridiagSym T_;
  double gamma0_ = 0.0;
  VectorXd y_next_;
  double gamma_next_ = 0.0;
  bool breakdown_ = false;
};

inline LanczosState lanczos_init(const VectorXd& g, const VectorXd& Hq0) {
  return LanczosState(g, Hq0);
}

inline void lanczos_expand(LanczosState& state, const VectorXd& Hq_new) {
  state.expand(Hq_new);
}

/// Maps reduced coordinates back to the full space: s = Q t.
inline VectorXd reconstruct_step(const LanczosState& state, const VectorXd& t) {
  if (t.size() != state.T().order())
    throw DimensionError("reduced step has wrong length");
  return state.Q() * t;
}

/// ||g + (H + lambda I) Q t|| for any reduced-space KKT pair, from the
/// cheap identity mu = gamma_{j+1} |e_{j+1}' t|.
inline double residual_norm(const LanczosState& state, const VectorXd& t) {
  if (t.size() != state.T().order())
    throw DimensionError("reduced step has wrong length");
  if (state.breakdown()) return 0.0;
  return state.gamma_next() * std::abs(t[t.size() - 1]);
}

struct ConditionDiagnostic {
  double kappa = 1.0;
  double residual_bound = 0.0;
};

/// Condition number of T + lambda I and the associated a-priori bound on
/// the reduced-space residual after j Lanczos iterations. The norm of
/// the full Hessian is estimated from the projected entries.
inline ConditionDiagnostic condition_diagnostic(const LanczosState& state,
                                                double lambda) {
  const auto [omega_min, omega_max] = extreme_eigenvalues(state.T());
  if (omega_min + lambda <= 0.0)
    throw NotPositiveDefinite("T + lambda I is not positive definite");
  ConditionDiagnostic out;
  out.kappa = (omega_max + lambda) / (omega_min + lambda);
  double max_theta = 0.0, max_gamma = 0.0;
  for (double th : state.T().diag) max_theta = std::max(max_theta, std::abs(th));
  for (double ga : state.T().offdiag) max_gamma = std::max(max_gamma, std::abs(ga));
  const double h_max_est = max_theta + 2.0 * max_gamma;
  const double contraction =
      (std::sqrt(out.kappa) - 1.0) / (std::sqrt(out.kappa) + 1.0);
  out.residual_bound = 2.0 * state.gamma0() * h_max_est * out.kappa /
                       (omega_max + lambda) *
                       std::pow(contraction, state.j());
  return out;
}

}  // namespace itrace
