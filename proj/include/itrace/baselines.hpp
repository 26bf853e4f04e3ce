#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "itrace/fds.hpp"
#include "itrace/solver.hpp"

namespace itrace {

/// Full-space subproblem backend for the exact-TRACE baseline: the dense
/// symmetric Hessian is eigendecomposed once per outer iteration and all
/// trust-region / regularized solves run in the eigenbasis. Residuals are
/// exactly zero, so the inexactness test is vacuous.
class DenseModel {
 public:
  DenseModel(const MatrixXd& H, const VectorXd& g) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(H);
    V_ = eig.eigenvectors();
    w_ = eig.eigenvalues();
    c_ = V_.transpose() * g;
    gamma0_ = g.norm();
  }

  double omega_min() const { return w_[0]; }

  VectorXd solve_reg(double lambda) const {
    if (w_[0] + lambda <= 0.0)
      throw NotPositiveDefinite("H + lambda I is not positive definite");
    return V_ * VectorXd(-c_.array() / (w_.array() + lambda));
  }

  SubproblemSolution solve_tr(double delta) const {
    SubproblemSolution sol;
    sol.delta = delta;
    if (w_[0] > 0.0) {
      VectorXd s = solve_reg(0.0);
      if (s.norm() <= delta) {
        sol.t = std::move(s);
        sol.lambda = 0.0;
        sol.on_boundary = sol.t.norm() >= delta * (1.0 - 1e-12);
        return sol;
      }
    }
    const double lambda_base = std::max(0.0, -w_[0]);
    double lo = lambda_base;
    double hi = lambda_base + gamma0_ / delta + std::abs(w_[w_.size() - 1]) + 1.0;

    auto norm_at = [&](double lambda) {
      double sq = 0.0;
      for (int i = 0; i < w_.size(); ++i) {
        const double d = w_[i] + lambda;
        sq += (c_[i] * c_[i]) / (d * d);
      }
      return std::sqrt(sq);
    };

    // Hard case: the coefficients on the critical eigenspace vanish and
    // the pseudo-inverse solution is still interior.
    const double eps = 1e-13 * (1.0 + std::abs(w_[0]));
    const double coeff_tol = 1e-12 * std::max(1.0, gamma0_);
    if (w_[0] <= 0.0) {
      double sq = 0.0;
      bool coeffs_vanish = true;
      for (int i = 0; i < w_.size(); ++i) {
        const double d = w_[i] + lambda_base;
        if (std::abs(d) > eps) {
          sq += (c_[i] * c_[i]) / (d * d);
        } else if (std::abs(c_[i]) > coeff_tol) {
          coeffs_vanish = false;
        }
      }
      if (coeffs_vanish && std::sqrt(sq) < delta) {
        VectorXd t_red = VectorXd::Zero(w_.size());
        for (int i = 0; i < w_.size(); ++i) {
          const double d = w_[i] + lambda_base;
          if (std::abs(d) > eps) t_red[i] = -c_[i] / d;
        }
        const double tau = std::sqrt(std::max(0.0, delta * delta - sq));
        t_red[0] += tau;
        sol.t = V_ * t_red;
        sol.lambda = lambda_base;
        sol.on_boundary = true;
        return sol;
      }
    }

    double lambda = lambda_base + gamma0_ / delta;
    for (int it = 0; it < 200; ++it) {
      lambda = std::min(std::max(lambda, lo + eps), hi);
      const double nt = norm_at(lambda);
      if (std::abs(nt - delta) <= 1e-12 * delta) break;
      if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                         (1.0 + std::abs(hi))) {
        break;  // ulp-limited: handled by the leading-component split below
      }
      if (nt > delta) lo = lambda; else hi = lambda;
      double dn = 0.0;  // d||t||/dlambda * ||t||
      for (int i = 0; i < w_.size(); ++i) {
        const double d = w_[i] + lambda;
        dn += (c_[i] * c_[i]) / (d * d * d);
      }
      const double phi = 1.0 / nt - 1.0 / delta;
      const double dphi = dn / (nt * nt * nt);
      double next = lambda - phi / dphi;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      lambda = next;
    }
    if (std::abs(norm_at(lambda) - delta) > 1e-10 * delta) {
      // ||t(lambda)|| jumps across delta within one ulp of lambda; free
      // the leading eigencomponent so stationarity stays exact.
      if (auto split = split_boundary(delta, lambda)) {
        return *split;
      }
    }
    sol.t = solve_reg(lambda);
    sol.lambda = lambda;
    sol.on_boundary = true;
    return sol;
  }

  std::pair<double, VectorXd> window(double lambda_lo, double lambda_hi,
                                     double sigma_lo, double sigma_hi) const {
    auto ratio = [&](double lambda, VectorXd& t_out) {
      try {
        t_out = solve_reg(lambda);
      } catch (const NotPositiveDefinite&) {
        return 0.0;
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
      if (r <= sigma_lo) a = mid;
      else if (r >= sigma_hi) b = mid;
      else return {mid, t};
      if (b - a <= 1e-16 * (1.0 + std::abs(b))) break;
    }
    throw BracketError("dense sigma window bisection failed");
  }

  const VectorXd& step(const VectorXd& t) const { return t; }
  double mu(const VectorXd&) const { return 0.0; }

 private:
  // Boundary solve with the leading eigencomponent freed: fixed point on
  // lambda = -omega_0 + |c_0| / beta with beta chosen so ||t|| = delta.
  // Converges when |c_0| is small, exactly the regime where the secular
  // Newton runs out of lambda resolution. Stationarity holds by
  // construction in every component.
  std::optional<SubproblemSolution> split_boundary(double delta,
                                                   double lambda) const {
    const int m = static_cast<int>(w_.size());
    VectorXd te(m);
    for (int it = 0; it < 100; ++it) {
      double perp_sq = 0.0;
      for (int i = 1; i < m; ++i) {
        const double d = w_[i] + lambda;
        if (d <= 0.0) return std::nullopt;
        te[i] = -c_[i] / d;
        perp_sq += te[i] * te[i];
      }
      const double beta_sq = delta * delta - perp_sq;
      if (beta_sq <= 0.0) return std::nullopt;
      const double beta = std::sqrt(beta_sq);
      te[0] = (c_[0] >= 0.0) ? -beta : beta;
      const double lambda_new = -w_[0] + std::abs(c_[0]) / beta;
      if (std::abs(lambda_new - lambda) <= 1e-15 * (1.0 + std::abs(lambda))) {
        if (lambda_new < 0.0) return std::nullopt;
        SubproblemSolution sol;
        sol.delta = delta;
        sol.lambda = lambda_new;
        sol.t = V_ * te;
        sol.on_boundary = true;
        return sol;
      }
      lambda = lambda_new;
    }
    return std::nullopt;
  }

  MatrixXd V_;
  VectorXd w_;
  VectorXd c_;
  double gamma0_ = 0.0;
};

namespace detail {

/// Eigenbasis fallback for the reduced cubic subproblem when the secular
/// Newton is ulp-limited (tiny leading eigencoefficient): fixed point on
/// lambda = -omega_0 + |c_0| / beta with beta chosen so ||t|| = lambda/sigma.
inline std::optional<std::pair<VectorXd, double>> cubic_eigen_solve(
    const TridiagSym& T, double gamma0, double sigma, double lambda) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(T.dense());
  const MatrixXd& V = eig.eigenvectors();
  const VectorXd& w = eig.eigenvalues();
  const VectorXd c = gamma0 * V.row(0).transpose();
  const int m = T.order();
  VectorXd te(m);
  for (int it = 0; it < 100; ++it) {
    double perp_sq = 0.0;
    for (int i = 1; i < m; ++i) {
      const double d = w[i] + lambda;
      if (d <= 0.0) return std::nullopt;
      te[i] = -c[i] / d;
      perp_sq += te[i] * te[i];
    }
    const double target = lambda / sigma;
    const double beta_sq = target * target - perp_sq;
    if (beta_sq <= 0.0) return std::nullopt;
    const double beta = std::sqrt(beta_sq);
    te[0] = (c[0] >= 0.0) ? -beta : beta;
    const double lambda_new = -w[0] + std::abs(c[0]) / beta;
    if (std::abs(lambda_new - lambda) <= 1e-15 * (1.0 + std::abs(lambda))) {
      if (lambda_new < 0.0) return std::nullopt;
      return std::make_pair(VectorXd(V * te), lambda_new);
    }
    lambda = lambda_new;
  }
  return std::nullopt;
}

}  // namespace detail

struct TraceStepResult {
  VectorXd s;
  double lambda = 0.0;
  double delta_bar = 0.0;
  double sigma_bar = 0.0;
  double f_trial = 0.0;
  FdsSummary fds;
  std::vector<FdsTraceEntry> trace;
};

/// One exact-TRACE outer step from (x, f, g): dense subproblem solve at
/// radius delta, then the same FDS accept/expand/contract logic as the
/// inexact solver. The dense Hessian evaluation is billed as n
/// Hessian-vector products.
inline TraceStepResult trace_step(const ObjectiveOracle& oracle,
                                  Counters& counters, const VectorXd& x,
                                  double f, const VectorXd& g, double delta,
                                  double sigma, const FdsParams& params) {
  const MatrixXd H = oracle.dense_hessian(x);
  counters.n_hv += oracle.n;
  DenseModel model(H, g);
  SubproblemSolution sol = model.solve_tr(delta);
  FdsResult fds = run_fds_impl(oracle, counters, x, f, model, g.norm(),
                               std::move(sol.t), sol.lambda, delta, sigma,
                               params);
  TraceStepResult out;
  out.s = std::move(fds.s);
  out.lambda = fds.lambda;
  out.delta_bar = fds.delta_bar;
  out.sigma_bar = fds.sigma_bar;
  out.f_trial = fds.f_trial;
  out.fds.calls = 1;
  out.fds.evals = static_cast<int>(fds.trace.size());
  for (const auto& e : fds.trace) {
    if (e.cls == StepClass::Expand) ++out.fds.expands;
    if (e.cls == StepClass::Contract) ++out.fds.contracts;
  }
  out.trace = std::move(fds.trace);
  return out;
}

/// Exact-TRACE comparator: identical outer/FDS logic with exact dense
/// subproblem solves; requires the oracle's dense-Hessian hook.
inline SolveResult trace_solve(const ObjectiveOracle& oracle, const VectorXd& x0,
                               const ItraceConfig& cfg,
                               int dense_cap = 2000) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(clock::now() - t_start).count();
  };

  if (!oracle.has_dense_hessian())
    throw ProblemTooLarge("exact TRACE requires a dense Hessian hook");
  if (oracle.n > dense_cap)
    throw ProblemTooLarge("problem dimension exceeds the dense cap");

  SolveResult result;
  VectorXd x = x0;
  double delta = cfg.delta0;
  double sigma = cfg.sigma0;
  try {
    double f = eval_f_counted(oracle, result.counters, x);
    VectorXd g = eval_grad_counted(oracle, result.counters, x);
    const double g_tol = cfg.grad_tol_rel * std::max(1.0, g.norm());
    for (long k = 0;; ++k) {
      if (g.norm() <= g_tol) { result.status = SolveStatus::Converged; break; }
      if (k >= cfg.max_outer_iters) { result.status = SolveStatus::MaxIters; break; }
      if (elapsed() > cfg.time_limit_s) { result.status = SolveStatus::TimeLimit; break; }

      TraceStepResult step = trace_step(oracle, result.counters, x, f, g,
                                        delta, sigma, cfg.fds);
      IterationRecord rec;
      rec.k = k;
      rec.g_norm = g.norm();
      rec.f = f;
      rec.j_final = oracle.n - 1;
      rec.delta = delta;
      rec.sigma = sigma;
      rec.lambda = step.lambda;
      rec.s_norm = step.s.norm();
      rec.mu = 0.0;
      rec.fds = step.fds;
      if (cfg.keep_path) {
        rec.x = x;
        rec.s = step.s;
        rec.fds_traces.push_back(step.trace);
      }
      rec.n_f = result.counters.n_f;
      rec.n_g = result.counters.n_g;
      rec.n_hv = result.counters.n_hv;
      result.records.push_back(std::move(rec));

      x += step.s;
      f = step.f_trial;
      g = eval_grad_counted(oracle, result.counters, x);
      delta = std::max(step.delta_bar, cfg.gamma_E * step.s.norm());
      sigma = step.sigma_bar;
    }
    result.x_final = x;
    result.f_final = f;
    result.g_norm_final = g.norm();
  } catch (const SolverError& err) {
    result.status = SolveStatus::Error;
    result.error_message = err.what();
    result.x_final = x;
  }
  result.wall_time_s = elapsed();
  return result;
}

/// Global minimizer of gamma0 e1't + 1/2 t'Tt + (sigma/3)||t||^3 in the
/// reduced space, via the scalar secular equation lambda = sigma ||t(lambda)||.
inline std::pair<VectorXd, double> arc_solve_reduced(const TridiagSym& T,
                                                     double gamma0,
                                                     double sigma) {
  if (gamma0 <= 0.0) throw InvalidGradientNorm("gamma0 must be positive");
  if (sigma <= 0.0) throw InvalidGradientNorm("sigma must be positive");

  const auto [omega_min, omega_max] = extreme_eigenvalues(T);
  (void)omega_max;
  const double lambda_min = std::max(0.0, -omega_min);
  const double eps = 1e-13 * (1.0 + std::abs(omega_min));

  auto t_norm_at = [&](double lambda, VectorXd& t) {
    t = solve_regularized(T, lambda, gamma0);
    return t.norm();
  };

  VectorXd t;
  // h(lambda) = lambda/sigma - ||t(lambda)|| is increasing; bracket a root.
  double lo = lambda_min + eps;
  double nt_lo;
  try {
    nt_lo = t_norm_at(lo, t);
  } catch (const NotPositiveDefinite&) {
    lo = lambda_min + 1e-8 * (1.0 + std::abs(omega_min));
    nt_lo = t_norm_at(lo, t);
  }
  if (lo / sigma >= nt_lo) {
    // Hard case: the limiting regularized solution is already shorter
    // than lambda/sigma; correct along the leftmost eigenvector.
    const VectorXd z = detail::tridiag_eigenvector(T, omega_min);
    const double target = lambda_min / sigma;
    const double tz = t.dot(z);
    const double disc =
        std::max(0.0, tz * tz + target * target - t.squaredNorm());
    const double tau = -tz + std::sqrt(disc);
    return {t + tau * z, lambda_min};
  }

  double hi = std::max(lo + 1.0, sigma * nt_lo);
  for (int it = 0; it < 200; ++it) {
    VectorXd tmp;
    if (hi / sigma >= t_norm_at(hi, tmp)) break;
    hi *= 2.0;
  }

  double lambda = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    lambda = std::min(std::max(lambda, lo), hi);
    const double nt = t_norm_at(lambda, t);
    const double h = lambda / sigma - nt;
    if (std::abs(h) <= 1e-12 * std::max(1.0, lambda / sigma)) {
      return {t, lambda};
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                       (1.0 + std::abs(hi))) {
      break;  // ||t(lambda)|| jumps across lambda/sigma within one ulp
    }
    if (h < 0.0) lo = lambda; else hi = lambda;
    // h'(lambda) = 1/sigma + t'(T+lambda I)^{-1}t / ||t||
    const int m = T.order();
    std::vector<double> d(m), l(std::max(0, m - 1));
    d[0] = T.diag[0] + lambda;
    for (int i = 1; i < m; ++i) {
      l[i - 1] = T.offdiag[i - 1] / d[i - 1];
      d[i] = (T.diag[i] + lambda) - l[i - 1] * T.offdiag[i - 1];
    }
    VectorXd w = t;
    for (int i = 1; i < m; ++i) w[i] -= l[i - 1] * w[i - 1];
    for (int i = 0; i < m; ++i) w[i] /= d[i];
    for (int i = m - 2; i >= 0; --i) w[i] -= l[i] * w[i + 1];
    const double dh = 1.0 / sigma + t.dot(w) / nt;
    double next = lambda - h / dh;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    lambda = next;
  }
  // Free the leftmost eigencomponent when the secular iteration is
  // limited by lambda granularity near -omega_min.
  if (auto split = detail::cubic_eigen_solve(T, gamma0, sigma, lambda)) {
    return *split;
  }
  throw SubproblemStall("cubic secular iteration cap exceeded");
}

struct ArcConfig {
  double eta1 = 1e-4;
  double eta2 = 0.9;
  double sigma0 = 1.0;
  double kappa_theta = 0.1;
  double sigma_floor = 1e-16;
  double grad_tol_rel = 1e-5;
  long max_outer_iters = 100000;
  double time_limit_s = 60.0;
};

/// Adaptive cubic regularization with Lanczos subproblem solves and the
/// s-based termination test ||r|| <= kappa_theta min(1,||s||) ||g||.
inline SolveResult arc_solve(const ObjectiveOracle& oracle, const VectorXd& x0,
                             const ArcConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(clock::now() - t_start).count();
  };

  SolveResult result;
  VectorXd x = x0;
  double sigma = cfg.sigma0;
  try {
    double f = eval_f_counted(oracle, result.counters, x);
    VectorXd g = eval_grad_counted(oracle, result.counters, x);
    const double g_tol = cfg.grad_tol_rel * std::max(1.0, g.norm());

    // The subspace is reusable across unsuccessful iterations at the
    // same iterate.
    std::unique_ptr<LanczosState> state;

    for (long k = 0;; ++k) {
      const double gamma0 = g.norm();
      if (gamma0 <= g_tol) { result.status = SolveStatus::Converged; break; }
      if (k >= cfg.max_outer_iters) { result.status = SolveStatus::MaxIters; break; }
      if (elapsed() > cfg.time_limit_s) { result.status = SolveStatus::TimeLimit; break; }

      if (!state) {
        const VectorXd q0 = g / gamma0;
        state = std::make_unique<LanczosState>(
            g, hess_vec_counted(oracle, result.counters, x, q0));
      }

      VectorXd t;
      double lambda_eq = 0.0;
      for (;;) {
        auto [t_sol, lam] = arc_solve_reduced(state->T(), gamma0, sigma);
        t = std::move(t_sol);
        lambda_eq = lam;
        const double mu = residual_norm(*state, t);
        if (mu <= cfg.kappa_theta * std::min(1.0, t.norm()) * gamma0 ||
            state->breakdown() || state->j() >= oracle.n - 1) {
          break;
        }
        const VectorXd v = state->next_direction();
        state->expand(hess_vec_counted(oracle, result.counters, x, v));
      }

      const VectorXd s = reconstruct_step(*state, t);
      const double f_trial = eval_f_counted(oracle, result.counters, x + s);
      const double t_norm = t.norm();
      const double model_dec =
          -(gamma0 * t[0] + 0.5 * t.dot(state->T().apply(t)) +
            sigma / 3.0 * t_norm * t_norm * t_norm);
      const double ratio = (f - f_trial) / std::max(model_dec, 1e-300);

      IterationRecord rec;
      rec.k = k;
      rec.g_norm = gamma0;
      rec.f = f;
      rec.j_final = state->j();
      rec.delta = t_norm;
      rec.sigma = sigma;
      rec.lambda = lambda_eq;
      rec.s_norm = s.norm();
      rec.mu = residual_norm(*state, t);

      if (ratio >= cfg.eta1) {
        x += s;
        f = f_trial;
        g = eval_grad_counted(oracle, result.counters, x);
        state.reset();
        if (ratio >= cfg.eta2) {
          sigma = std::max(std::min(sigma, gamma0), cfg.sigma_floor);
        }
      } else {
        sigma *= 2.0;
      }

      rec.n_f = result.counters.n_f;
      rec.n_g = result.counters.n_g;
      rec.n_hv = result.counters.n_hv;
      result.records.push_back(std::move(rec));
    }
    result.x_final = x;
    result.f_final = f;
    result.g_norm_final = g.norm();
  } catch (const SolverError& err) {
    result.status = SolveStatus::Error;
    result.error_message = err.what();
    result.x_final = x;
  }
  result.wall_time_s = elapsed();
  return result;
}

}  // namespace itrace
