#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "itrace/fds.hpp"
#include "itrace/problem.hpp"
#include "itrace/tltr.hpp"

namespace itrace {

enum class SolveStatus { Converged, MaxIters, TimeLimit, Error };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIters: return "MaxIters";
    case SolveStatus::TimeLimit: return "TimeLimit";
    default: return "Error";
  }
}

enum class LocalTightening { Off, Superlinear, Quadratic };

struct ItraceConfig {
  InexactnessParams xi;
  FdsParams fds;
  double gamma_E = 1.1;
  double delta0 = 1.0;
  double sigma0 = 1.0;       // must lie in [sigma_lo, sigma_hi]
  double grad_tol_rel = 1e-5;
  long max_outer_iters = 100000;
  double time_limit_s = 60.0;
  LocalTightening local_tightening = LocalTightening::Off;
  bool branch2_enabled = true;
  bool keep_path = false;    // store iterates and steps in the records
};

struct FdsSummary {
  int calls = 0;
  int evals = 0;
  int expands = 0;
  int contracts = 0;
};

struct IterationRecord {
  long k = 0;
  double g_norm = 0.0;
  double f = 0.0;
  int j_final = 0;
  double delta = 0.0;
  double sigma = 0.0;
  double lambda = 0.0;
  double s_norm = 0.0;
  double mu = 0.0;
  long n_f = 0, n_g = 0, n_hv = 0;  // cumulative
  FdsSummary fds;
  VectorXd x;  // populated only with keep_path
  VectorXd s;
  std::vector<std::vector<FdsTraceEntry>> fds_traces;  // keep_path only
};

struct SolveResult {
  SolveStatus status = SolveStatus::Error;
  std::string error_message;
  VectorXd x_final;
  double f_final = 0.0;
  double g_norm_final = 0.0;
  std::vector<IterationRecord> records;
  Counters counters;
  double wall_time_s = 0.0;
};

namespace detail {

inline bool accept_with_tightening(double mu, double t_norm, double gamma0,
                                   double opnorm, const ItraceConfig& cfg) {
  if (!check_inexact_termination(mu, t_norm, gamma0, opnorm, cfg.xi,
                                 cfg.branch2_enabled)) {
    return false;
  }
  switch (cfg.local_tightening) {
    case LocalTightening::Superlinear:
      return mu <= 0.1 * std::min(1.0, std::sqrt(gamma0)) * gamma0;
    case LocalTightening::Quadratic:
      return mu <= gamma0 * gamma0;
    default:
      return true;
  }
}

}  // namespace detail

/// Outer I-TRACE driver: TLTR, then alternating FDS calls and Krylov
/// subspace growth until the inexactness test holds in the full space,
/// then iterate/radius/sigma updates and the relative gradient stop.
inline SolveResult itrace_solve(const ObjectiveOracle& oracle,
                                const VectorXd& x0, const ItraceConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(clock::now() - t_start).count();
  };

  SolveResult result;
  VectorXd x = x0;
  double delta = cfg.delta0;
  double sigma = cfg.sigma0;

  try {
    double f = eval_f_counted(oracle, result.counters, x);
    VectorXd g = eval_grad_counted(oracle, result.counters, x);
    const double g_tol = cfg.grad_tol_rel * std::max(1.0, g.norm());

    for (long k = 0;; ++k) {
      const double gamma0 = g.norm();
      if (gamma0 <= g_tol) {
        result.status = SolveStatus::Converged;
        break;
      }
      if (k >= cfg.max_outer_iters) {
        result.status = SolveStatus::MaxIters;
        break;
      }
      if (elapsed() > cfg.time_limit_s) {
        result.status = SolveStatus::TimeLimit;
        break;
      }

      IterationRecord rec;
      rec.k = k;
      rec.g_norm = gamma0;
      rec.f = f;
      if (cfg.keep_path) rec.x = x;
      rec.delta = delta;
      rec.sigma = sigma;

      TltrOutput tltr = run_tltr(oracle, result.counters, x, g, delta, cfg.xi,
                                 cfg.branch2_enabled);
      LanczosState state = std::move(tltr.state);
      VectorXd t = std::move(tltr.solution.t);
      double lambda = tltr.solution.lambda;

      VectorXd s;
      double f_next = f, mu = tltr.mu;
      double delta_bar = delta, sigma_bar = sigma;
      for (;;) {
        FdsResult fds = run_fds(oracle, result.counters, x, f, state, t,
                                lambda, delta, sigma, cfg.fds);
        ++rec.fds.calls;
        rec.fds.evals += static_cast<int>(fds.trace.size());
        for (const auto& e : fds.trace) {
          if (e.cls == StepClass::Expand) ++rec.fds.expands;
          if (e.cls == StepClass::Contract) ++rec.fds.contracts;
        }
        if (cfg.keep_path) rec.fds_traces.push_back(fds.trace);
        t = std::move(fds.t);
        lambda = fds.lambda;
        mu = fds.mu;
        const double opnorm = opnorm_shifted(state.T(), lambda);
        if (detail::accept_with_tightening(mu, t.norm(), gamma0, opnorm, cfg)) {
          s = std::move(fds.s);
          f_next = fds.f_trial;
          delta_bar = fds.delta_bar;
          sigma_bar = fds.sigma_bar;
          break;
        }
        if (state.breakdown() || state.j() >= oracle.n - 1) {
          throw InternalInvariantViolation(
              "inner loop could not expand past the full Krylov subspace");
        }
        const VectorXd v = state.next_direction();
        state.expand(hess_vec_counted(oracle, result.counters, x, v));
        SubproblemSolution sol =
            solve_trust_region(state.T(), gamma0, delta);
        t = std::move(sol.t);
        lambda = sol.lambda;
        mu = residual_norm(state, t);
      }

      rec.j_final = state.j();
      rec.lambda = lambda;
      rec.s_norm = s.norm();
      rec.mu = mu;
      if (cfg.keep_path) rec.s = s;
      rec.n_f = result.counters.n_f;
      rec.n_g = result.counters.n_g;
      rec.n_hv = result.counters.n_hv;
      result.records.push_back(std::move(rec));

      x += s;
      f = f_next;
      g = eval_grad_counted(oracle, result.counters, x);
      delta = std::max(delta_bar, cfg.gamma_E * s.norm());
      sigma = sigma_bar;
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

struct DecreaseCertificate {
  long k = 0;
  double decrease = 0.0;   // f_k - f_{k+1}
  double required = 0.0;   // eta ||s_k||^3
  bool ok = false;
};

struct ComplexityAudit {
  long n_iters_above_eps = 0;
  std::vector<DecreaseCertificate> decrease_certificates;
};

/// Counts iterations above the stationarity target and re-verifies each
/// accepted step's decrease inequality from the stored record stream.
inline ComplexityAudit complexity_audit(const std::vector<IterationRecord>& records,
                                        double f_final, double eta,
                                        double epsilon) {
  ComplexityAudit audit;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.g_norm > epsilon) ++audit.n_iters_above_eps;
    const double f_next = (i + 1 < records.size()) ? records[i + 1].f : f_final;
    DecreaseCertificate cert;
    cert.k = rec.k;
    cert.decrease = rec.f - f_next;
    cert.required = eta * rec.s_norm * rec.s_norm * rec.s_norm;
    cert.ok = cert.decrease >= cert.required - 1e-12 * std::max(1.0, std::abs(rec.f));
    audit.decrease_certificates.push_back(cert);
  }
  return audit;
}

}  // namespace itrace
