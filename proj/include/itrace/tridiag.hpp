#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "itrace/errors.hpp"

namespace itrace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Symmetric tridiagonal matrix: diagonal theta_0..theta_j and
/// off-diagonal gamma_1..gamma_j.
struct TridiagSym {
  std::vector<double> diag;
  std::vector<double> offdiag;

  int order() const { return static_cast<int>(diag.size()); }

  VectorXd apply(const VectorXd& t) const {
    const int m = order();
    VectorXd out(m);
    for (int i = 0; i < m; ++i) {
      double v = diag[i] * t[i];
      if (i > 0) v += offdiag[i - 1] * t[i - 1];
      if (i + 1 < m) v += offdiag[i] * t[i + 1];
      out[i] = v;
    }
    return out;
  }

  MatrixXd dense() const {
    const int m = order();
    MatrixXd out = MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      out(i, i) = diag[i];
      if (i + 1 < m) out(i, i + 1) = out(i + 1, i) = offdiag[i];
    }
    return out;
  }

  // Gershgorin bound on the spectral radius.
  double norm_bound() const {
    const int m = order();
    double bound = 0.0;
    for (int i = 0; i < m; ++i) {
      double row = std::abs(diag[i]);
      if (i > 0) row += std::abs(offdiag[i - 1]);
      if (i + 1 < m) row += std::abs(offdiag[i]);
      bound = std::max(bound, row);
    }
    return bound;
  }
};

/// Primal-dual trust-region subproblem solution in reduced coordinates.
struct SubproblemSolution {
  VectorXd t;
  double lambda = 0.0;
  double delta = 0.0;
  bool on_boundary = false;
};

namespace detail {

// Number of eigenvalues of T strictly less than x, by Sturm counting on
// the shifted LDL^T recurrence.
inline int sturm_count(const TridiagSym& T, double x) {
  const int m = T.order();
  int count = 0;
  double d = T.diag[0] - x;
  if (d < 0.0) ++count;
  for (int i = 1; i < m; ++i) {
    const double g = T.offdiag[i - 1];
    if (d == 0.0) d = 1e-300;  // zero pivot: perturb to keep the count exact
    d = (T.diag[i] - x) - g * g / d;
    if (d < 0.0) ++count;
  }
  return count;
}

// Bisection for the eigenvalue with the given number of eigenvalues
// strictly below it (k = 0 gives the smallest, k = m-1 the largest).
inline double sturm_eigenvalue(const TridiagSym& T, int k) {
  double lo = -T.norm_bound() - 1.0;
  double hi = T.norm_bound() + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sturm_count(T, mid) <= k) {
      lo = mid;
    } else {
      hi = mid;
    }
    const double tol = 1e-13 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
    if (hi - lo <= tol) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Smallest and largest eigenvalues via Sturm-sequence bisection.
inline std::pair<double, double> extreme_eigenvalues(const TridiagSym& T) {
  const int m = T.order();
  if (m == 1) return {T.diag[0], T.diag[0]};
  return {detail::sturm_eigenvalue(T, 0), detail::sturm_eigenvalue(T, m - 1)};
}

/// Solves (T + lambda I) t = -gamma0 e1 by tridiagonal LDL^T.
/// Throws NotPositiveDefinite on a nonpositive pivot.
inline VectorXd solve_regularized(const TridiagSym& T, double lambda,
                                  double gamma0) {
  const int m = T.order();
  std::vector<double> d(m), l(std::max(0, m - 1));
  d[0] = T.diag[0] + lambda;
  if (d[0] <= 0.0) throw NotPositiveDefinite("nonpositive pivot in LDL^T");
  for (int i = 1; i < m; ++i) {
    l[i - 1] = T.offdiag[i - 1] / d[i - 1];
    d[i] = (T.diag[i] + lambda) - l[i - 1] * T.offdiag[i - 1];
    if (d[i] <= 0.0) throw NotPositiveDefinite("nonpositive pivot in LDL^T");
  }
  // Forward substitution on L z = -gamma0 e1, then D, then L^T.
  VectorXd t(m);
  t[0] = -gamma0;
  for (int i = 1; i < m; ++i) t[i] = -l[i - 1] * t[i - 1];
  for (int i = 0; i < m; ++i) t[i] /= d[i];
  for (int i = m - 2; i >= 0; --i) t[i] -= l[i] * t[i + 1];
  return t;
}

namespace detail {

// One eigenvector of T for a known extreme eigenvalue, by inverse
// iteration with a slightly shifted PD system.
inline VectorXd tridiag_eigenvector(const TridiagSym& T, double omega) {
  const int m = T.order();
  const double shift = -omega + 1e-11 * (1.0 + std::abs(omega));
  VectorXd z(m);
  for (int i = 0; i < m; ++i) z[i] = std::sin(0.7 * (i + 1)) + 0.5;
  z.normalize();
  for (int it = 0; it < 4; ++it) {
    // Reuse the regularized solver with rhs z: shift so T+shift*I is PD
    // and solve (T + shift I) w = z via LDL^T manually.
    std::vector<double> d(m), l(std::max(0, m - 1));
    d[0] = T.diag[0] + shift;
    for (int i = 1; i < m; ++i) {
      l[i - 1] = T.offdiag[i - 1] / d[i - 1];
      d[i] = (T.diag[i] + shift) - l[i - 1] * T.offdiag[i - 1];
    }
    VectorXd w = z;
    for (int i = 1; i < m; ++i) w[i] -= l[i - 1] * w[i - 1];
    for (int i = 0; i < m; ++i) w[i] /= d[i];
    for (int i = m - 2; i >= 0; --i) w[i] -= l[i] * w[i + 1];
    z = w.normalized();
  }
  return z;
}

// Boundary solve in the eigenbasis of T. When the multiplier sits within
// rounding distance of -omega_min, the secular equation is too steep to pin
// ||t(lambda)|| = delta through lambda alone; splitting off the component
// along the leftmost eigenvector keeps the stationarity residual at rounding
// level. Returns nullopt when the boundary crossing is not near -omega_min.
inline std::optional<SubproblemSolution> boundary_eigen_solve(
    const TridiagSym& T, double gamma0, double delta, double lambda_guess) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(T.dense());
  if (eig.info() != Eigen::Success) return std::nullopt;
  const VectorXd& omega = eig.eigenvalues();
  const MatrixXd& V = eig.eigenvectors();
  const int m = T.order();
  const VectorXd c = gamma0 * V.row(0).transpose();

  double lambda = std::max(lambda_guess, -omega[0]);
  VectorXd te(m);
  bool converged = false;
  for (int it = 0; it < 100 && !converged; ++it) {
    double perp_sq = 0.0;
    for (int i = 1; i < m; ++i) {
      const double denom = omega[i] + lambda;
      if (denom <= 0.0) return std::nullopt;
      te[i] = -c[i] / denom;
      perp_sq += te[i] * te[i];
    }
    const double beta_sq = delta * delta - perp_sq;
    if (beta_sq <= 0.0) return std::nullopt;
    const double beta = std::sqrt(beta_sq);
    te[0] = (c[0] >= 0.0) ? -beta : beta;
    // Zero the leading stationarity component: c1 + (omega1+lambda) t1 = 0.
    const double lambda_new = -omega[0] + std::abs(c[0]) / beta;
    converged = std::abs(lambda_new - lambda) <= 1e-15 * (1.0 + std::abs(lambda));
    lambda = lambda_new;
  }
  if (!converged || lambda < 0.0) return std::nullopt;

  SubproblemSolution sol;
  sol.t = V * te;
  sol.lambda = lambda;
  sol.delta = delta;
  sol.on_boundary = true;
  return sol;
}

}  // namespace detail

/// More-Sorensen solve of min gamma0 e1' t + 1/2 t' T t s.t. ||t|| <= delta.
/// Handles interior solutions, boundary solutions via safeguarded Newton
/// on the secular equation 1/||t(lambda)|| = 1/delta, and the hard case.
inline SubproblemSolution solve_trust_region(const TridiagSym& T, double gamma0,
                                             double delta) {
  if (gamma0 <= 0.0) throw InvalidGradientNorm("gamma0 must be positive");
  if (delta <= 0.0) throw InvalidGradientNorm("delta must be positive");

  const auto [omega_min, omega_max] = extreme_eigenvalues(T);
  (void)omega_max;

  if (omega_min > 0.0) {
    VectorXd t0;
    bool ok = true;
    try {
      t0 = solve_regularized(T, 0.0, gamma0);
    } catch (const NotPositiveDefinite&) {
      ok = false;  // omega_min numerically at zero
    }
    if (ok && t0.norm() <= delta) {
      SubproblemSolution sol;
      sol.t = std::move(t0);
      sol.lambda = 0.0;
      sol.delta = delta;
      sol.on_boundary = sol.t.norm() >= delta * (1.0 - 1e-12);
      return sol;
    }
  }

  // Boundary solution: lambda >= max(0, -omega_min).
  const double lambda_base = std::max(0.0, -omega_min);
  const double eps_shift = 1e-14 * (1.0 + std::abs(omega_min));
  double lo = lambda_base + eps_shift;
  double hi = lambda_base + gamma0 / delta + T.norm_bound() + 1.0;

  // Hard-case probe: if ||t(lambda)|| stays below delta as lambda
  // approaches -omega_min from above, an eigenvector correction is needed.
  if (omega_min <= 0.0) {
    bool below = false;
    VectorXd t_lo;
    try {
      t_lo = solve_regularized(T, lo, gamma0);
      below = t_lo.norm() < delta;
    } catch (const NotPositiveDefinite&) {
      below = false;
    }
    if (below) {
      if (auto sol = detail::boundary_eigen_solve(T, gamma0, delta, lo)) {
        return *sol;
      }
      const VectorXd z = detail::tridiag_eigenvector(T, omega_min);
      const double tz = t_lo.dot(z);
      const double disc = tz * tz + delta * delta - t_lo.squaredNorm();
      double tau;
      if (disc <= 0.0) {
        tau = -tz;
      } else if (tz >= 0.0) {
        tau = (delta * delta - t_lo.squaredNorm()) / (tz + std::sqrt(disc));
      } else {
        tau = -tz + std::sqrt(disc);
      }
      SubproblemSolution sol;
      sol.t = t_lo + tau * z;
      sol.lambda = lambda_base;
      sol.delta = delta;
      sol.on_boundary = true;
      return sol;
    }
  }

  // Safeguarded Newton on phi(lambda) = 1/||t(lambda)|| - 1/delta,
  // which is increasing and nearly linear in lambda.
  double lambda = std::min(hi, std::max(lo, lambda_base + gamma0 / delta));
  VectorXd t;
  for (int it = 0; it < 200; ++it) {
    bool solved = true;
    try {
      t = solve_regularized(T, lambda, gamma0);
    } catch (const NotPositiveDefinite&) {
      solved = false;
    }
    if (!solved) {
      lo = std::max(lo, lambda);
      lambda = 0.5 * (lo + hi);
      continue;
    }
    const double nt = t.norm();
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                       (1.0 + std::abs(hi)) &&
        std::abs(nt - delta) > 1e-10 * delta) {
      // Near-hard case: ||t(lambda)|| jumps across delta within one ulp
      // of lambda, so the crossing cannot be pinned through lambda alone.
      // Re-solve in the eigenbasis, where the leading component is free.
      if (auto sol = detail::boundary_eigen_solve(T, gamma0, delta, lambda)) {
        return *sol;
      }
      // Eigenbasis solve declined (crossing not at -omega_min after all):
      // the plain solve is within one lambda-ulp of the boundary already.
      SubproblemSolution sol;
      sol.t = std::move(t);
      sol.lambda = lambda;
      sol.delta = delta;
      sol.on_boundary = true;
      return sol;
    }
    if (std::abs(nt - delta) <= 1e-10 * delta) {
      SubproblemSolution sol;
      sol.t = std::move(t);
      sol.lambda = lambda;
      sol.delta = delta;
      sol.on_boundary = true;
      return sol;
    }
    if (nt > delta) {
      lo = lambda;
    } else {
      hi = lambda;
    }
    // phi'(lambda) = t'(T+lambda I)^{-1} t / ||t||^3
    const VectorXd w = [&] {
      const int m = T.order();
      std::vector<double> d(m), l(std::max(0, m - 1));
      d[0] = T.diag[0] + lambda;
      for (int i = 1; i < m; ++i) {
        l[i - 1] = T.offdiag[i - 1] / d[i - 1];
        d[i] = (T.diag[i] + lambda) - l[i - 1] * T.offdiag[i - 1];
      }
      VectorXd ww = t;
      for (int i = 1; i < m; ++i) ww[i] -= l[i - 1] * ww[i - 1];
      for (int i = 0; i < m; ++i) ww[i] /= d[i];
      for (int i = m - 2; i >= 0; --i) ww[i] -= l[i] * ww[i + 1];
      return ww;
    }();
    const double phi = 1.0 / nt - 1.0 / delta;
    const double dphi = t.dot(w) / (nt * nt * nt);
    double next = lambda - phi / dphi;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    lambda = next;
  }
  throw SubproblemStall("secular Newton iteration cap exceeded");
}

/// Bisection on phi(lambda) = lambda/||t(lambda)|| over (lambda_lo,
/// lambda_hi), stopping the moment the ratio lands strictly inside
/// (sigma_lo, sigma_hi). phi is monotonically increasing on the bracket.
inline std::pair<double, VectorXd> find_sigma_window_lambda(
    const TridiagSym& T, double gamma0, double lambda_lo, double lambda_hi,
    double sigma_lo, double sigma_hi) {
  auto ratio = [&](double lambda, VectorXd& t_out) -> double {
    try {
      t_out = solve_regularized(T, lambda, gamma0);
    } catch (const NotPositiveDefinite&) {
      return 0.0;  // ||t|| -> inf at the PD boundary
    }
    return lambda / t_out.norm();
  };

  VectorXd t;
  const double r_lo = ratio(lambda_lo, t);
  if (r_lo > sigma_lo && r_lo < sigma_hi) return {lambda_lo, t};

  double a = lambda_lo, b = lambda_hi;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (a + b);
    const double r = ratio(mid, t);
    if (r <= sigma_lo) {
      a = mid;
    } else if (r >= sigma_hi) {
      b = mid;
    } else {
      return {mid, t};
    }
    if (b - a <= 1e-16 * (1.0 + std::abs(b))) break;
  }
  throw BracketError("sigma window bisection failed to locate the ratio window");
}

}  // namespace itrace
