#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "itrace/lanczos.hpp"
#include "itrace/problem.hpp"
#include "itrace/tridiag.hpp"

namespace itrace {

struct FdsParams {
  double eta = 1e-4;          // sufficient-decrease threshold on rho
  double sigma_lo = 0.01;     // lower sigma window bound
  double sigma_hi = 100.0;    // upper sigma window bound
  double gamma_C = 0.5;       // radius contraction factor
  double gamma_lambda = 2.0;  // dual inflation factor
  int max_iters = 200;
};

enum class StepClass { Accept, Expand, Contract };

struct FdsTraceEntry {
  StepClass cls;
  double delta;
  double lambda;
  double t_norm;
  double rho;
};

struct FdsResult {
  VectorXd t;
  double lambda = 0.0;
  double mu = 0.0;
  double delta_bar = 0.0;
  double sigma_bar = 0.0;
  VectorXd s;             // accepted full-space step
  double f_trial = 0.0;   // objective at x + s, reused by the caller
  std::vector<FdsTraceEntry> trace;
};

/// Function-decrease-to-step-norm-cubed ratio governing acceptance.
inline double compute_rho(double f_k, double f_trial, double s_norm) {
  const double cube = s_norm * s_norm * s_norm;
  if (cube <= 1e-300) throw DegenerateStep("step norm underflows rho");
  return (f_k - f_trial) / cube;
}

inline StepClass classify_step(double rho, double lambda, double t_norm,
                               double sigma, double eta) {
  if (rho >= eta) {
    return lambda / t_norm <= sigma ? StepClass::Accept : StepClass::Expand;
  }
  return StepClass::Contract;
}

/// Reduced-space subproblem backend over a fixed Lanczos subspace.
class LanczosModel {
 public:
  explicit LanczosModel(const LanczosState& state) : state_(state) {}

  SubproblemSolution solve_tr(double delta) const {
    return solve_trust_region(state_.T(), state_.gamma0(), delta);
  }
  VectorXd solve_reg(double lambda) const {
    return solve_regularized(state_.T(), lambda, state_.gamma0());
  }
  std::pair<double, VectorXd> window(double lambda_lo, double lambda_hi,
                                     double sigma_lo, double sigma_hi) const {
    return find_sigma_window_lambda(state_.T(), state_.gamma0(), lambda_lo,
                                    lambda_hi, sigma_lo, sigma_hi);
  }
  VectorXd step(const VectorXd& t) const { return reconstruct_step(state_, t); }
  double mu(const VectorXd& t) const { return residual_norm(state_, t); }

 private:
  const LanczosState& state_;
};

/// Find Decrease Step over a fixed subproblem backend: evaluate the trial
/// objective once per pass, then accept, expand, or contract until a step
/// with rho >= eta and lambda/||t|| <= sigma is produced.
template <class Model>
FdsResult run_fds_impl(const ObjectiveOracle& oracle, Counters& counters,
                       const VectorXd& x_k, double f_k, const Model& model,
                       double gamma0, VectorXd t, double lambda, double delta,
                       double sigma, const FdsParams& params) {
  FdsResult result;
  for (int l = 0; l < params.max_iters; ++l) {
    const VectorXd s = model.step(t);
    const double t_norm = t.norm();
    const double f_trial = eval_f_counted(oracle, counters, x_k + s);
    const double rho = compute_rho(f_k, f_trial, t_norm);
    const StepClass cls = classify_step(rho, lambda, t_norm, sigma, params.eta);
    result.trace.push_back({cls, delta, lambda, t_norm, rho});

    if (cls == StepClass::Accept) {
      result.t = std::move(t);
      result.lambda = lambda;
      result.mu = model.mu(result.t);
      result.delta_bar = delta;
      result.sigma_bar = sigma;
      result.s = s;
      result.f_trial = f_trial;
      return result;
    }

    if (cls == StepClass::Expand) {
      delta = lambda / sigma;
      SubproblemSolution sol = model.solve_tr(delta);
      t = std::move(sol.t);
      lambda = sol.lambda;
      continue;  // sigma unchanged on expansion
    }

    // Contraction.
    if (lambda < params.sigma_lo * t_norm) {
      const double lambda_hat = lambda + std::sqrt(params.sigma_lo * gamma0);
      VectorXd t_hat = model.solve_reg(lambda_hat);
      if (lambda_hat / t_hat.norm() <= params.sigma_hi) {
        t = std::move(t_hat);
        lambda = lambda_hat;
        delta = t.norm();
      } else {
        auto [lambda_bar, t_bar] =
            model.window(lambda, lambda_hat, params.sigma_lo, params.sigma_hi);
        t = std::move(t_bar);
        lambda = lambda_bar;
        delta = t.norm();
      }
    } else {
      const double lambda_hat = params.gamma_lambda * lambda;
      VectorXd t_hat = model.solve_reg(lambda_hat);
      if (t_hat.norm() >= params.gamma_C * delta) {
        delta = t_hat.norm();
        t = std::move(t_hat);
        lambda = lambda_hat;
      } else {
        delta = params.gamma_C * delta;
        SubproblemSolution sol = model.solve_tr(delta);
        t = std::move(sol.t);
        lambda = sol.lambda;
      }
    }
    sigma = std::max(sigma, lambda / t.norm());
  }
  throw FdsStall("FDS iteration cap exceeded");
}

/// FDS over a fixed Lanczos subspace (the I-TRACE inner call).
inline FdsResult run_fds(const ObjectiveOracle& oracle, Counters& counters,
                         const VectorXd& x_k, double f_k,
                         const LanczosState& state, const VectorXd& t0,
                         double lambda0, double delta0, double sigma0,
                         const FdsParams& params) {
  return run_fds_impl(oracle, counters, x_k, f_k, LanczosModel(state),
                      state.gamma0(), t0, lambda0, delta0, sigma0, params);
}

}  // namespace itrace
