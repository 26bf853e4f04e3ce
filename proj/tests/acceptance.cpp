// Acceptance harness: one pass/fail line per criterion. Criterion 9 is a
// reported trend, not a gate; every other criterion contributes to the
// exit code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "itrace/itrace.hpp"

using namespace itrace;

namespace {

int hard_failures = 0;

void report(int idx, bool pass, const std::string& name,
            const std::string& detail, bool soft = false) {
  const char* verdict = pass ? "PASS" : (soft ? "WARN" : "FAIL");
  if (!pass && !soft) ++hard_failures;
  std::printf("criterion %2d: %s  %s (%s)\n", idx, verdict, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
}

double reduced_objective(const TridiagSym& T, double gamma0, const VectorXd& t) {
  return gamma0 * t[0] + 0.5 * t.dot(T.apply(t));
}

MatrixXd random_symmetric(std::mt19937& rng, int n) {
  std::normal_distribution<double> gauss;
  MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
  return 0.5 * (A + A.transpose());
}

ObjectiveOracle exp_objective(int n) {
  ObjectiveOracle o;
  o.n = n;
  o.eval_f = [](const VectorXd& x) {
    return (x.array().exp() - x.array()).sum();
  };
  o.eval_grad = [](const VectorXd& x) { return VectorXd(x.array().exp() - 1.0); };
  o.hess_vec = [](const VectorXd& x, const VectorXd& v) {
    return VectorXd(x.array().exp() * v.array());
  };
  return o;
}

// --- criterion 1: reduced trust-region KKT certificates -------------------

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937 rng(101);
  std::uniform_int_distribution<int> order_dist(1, 30);
  std::uniform_real_distribution<double> diag_dist(-2.0, 2.0);
  std::uniform_real_distribution<double> off_dist(0.05, 1.5);
  std::uniform_real_distribution<double> g_dist(0.1, 10.0);
  std::uniform_real_distribution<double> delta_dist(0.05, 5.0);

  long violations = 0;
  long dense_checked = 0;
  double worst_resid = 0.0, worst_gap = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int order = order_dist(rng);
    TridiagSym T;
    for (int i = 0; i < order; ++i) T.diag.push_back(diag_dist(rng));
    for (int i = 0; i + 1 < order; ++i) T.offdiag.push_back(off_dist(rng));
    const double gamma0 = g_dist(rng);
    const double delta = delta_dist(rng);

    const SubproblemSolution sol = solve_trust_region(T, gamma0, delta);
    const double t_norm = sol.t.norm();

    VectorXd resid = T.apply(sol.t) + sol.lambda * sol.t;
    resid[0] += gamma0;
    worst_resid = std::max(worst_resid, resid.norm() / std::max(1.0, gamma0));
    bool ok = resid.norm() <= 1e-8 * std::max(1.0, gamma0);
    ok = ok && sol.lambda >= 0.0;
    ok = ok && t_norm <= delta * (1.0 + 1e-8);
    ok = ok && std::abs(sol.lambda * (delta - t_norm)) <=
                   1e-8 * std::max(1.0, sol.lambda * delta);
    const auto [omega_min, omega_max] = extreme_eigenvalues(T);
    (void)omega_max;
    ok = ok && omega_min + sol.lambda >= -1e-9 * (1.0 + std::abs(omega_min));

    if (order <= 8) {
      // Independent dense-eigenbasis oracle for the global optimum value.
      VectorXd e1 = VectorXd::Zero(order);
      e1[0] = gamma0;
      const DenseModel dense(T.dense(), e1);
      const SubproblemSolution ref = dense.solve_tr(delta);
      const double q_sol = reduced_objective(T, gamma0, sol.t);
      const double q_ref = reduced_objective(T, gamma0, ref.t);
      const double gap = q_sol - q_ref;
      worst_gap = std::max(worst_gap, std::abs(gap));
      ok = ok && std::abs(gap) <= 1e-8 * std::max(1.0, std::abs(q_ref));
      ++dense_checked;
    }
    if (!ok) ++violations;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::ostringstream detail;
  detail << "1000 instances, " << violations << " violations, " << dense_checked
         << " dense-optimum checks, max objective gap " << worst_gap << ", "
         << secs << " s";
  report(1, violations == 0 && secs < 10.0, "reduced subproblem KKT suite",
         detail.str());
}

// --- criterion 2: residual identity ---------------------------------------

void criterion_2() {
  std::mt19937 rng(102);
  std::uniform_int_distribution<int> n_dist(2, 30);
  std::uniform_real_distribution<double> delta_dist(0.05, 4.0);
  std::normal_distribution<double> gauss;

  long violations = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = n_dist(rng);
    const MatrixXd H = random_symmetric(rng, n);
    VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = gauss(rng);
    if (g.norm() < 1e-3) g[0] += 1.0;

    LanczosState state(g, H * (g / g.norm()));
    std::uniform_int_distribution<int> j_dist(0, n - 1);
    const int j_target = j_dist(rng);
    while (state.j() < j_target && !state.breakdown()) {
      state.expand(H * state.next_direction());
    }

    const double delta = delta_dist(rng);
    const SubproblemSolution sol =
        solve_trust_region(state.T(), state.gamma0(), delta);
    const double mu = residual_norm(state, sol.t);

    const VectorXd s = reconstruct_step(state, sol.t);
    const VectorXd r = g + H * s + sol.lambda * s;
    const double gap = std::abs(r.norm() - mu);
    worst = std::max(worst, gap / (1.0 + g.norm()));
    if (gap > 1e-8 * (1.0 + g.norm())) ++violations;
  }
  std::ostringstream detail;
  detail << "200 instances, " << violations
         << " violations, max normalized gap " << worst;
  report(2, violations == 0, "Lanczos residual identity", detail.str());
}

// --- criterion 3: exact-limit consistency ---------------------------------

void criterion_3() {
  const char* names[] = {"rosenbrock", "beale", "booth", "himmelblau",
                         "rosenbrock-ext-10"};
  long checked = 0, violations = 0;
  double worst = 0.0;
  for (const char* name : names) {
    const Problem prob = lookup_problem(name);
    ItraceConfig cfg;
    cfg.xi.xi1 = 1e-10;
    cfg.branch2_enabled = false;
    cfg.keep_path = true;
    const SolveResult res = itrace_solve(prob.oracle, prob.start, cfg);
    if (res.status != SolveStatus::Converged) {
      ++violations;
      continue;
    }
    for (const auto& rec : res.records) {
      Counters c;
      const double f = prob.oracle.eval_f(rec.x);
      const VectorXd g = prob.oracle.eval_grad(rec.x);
      const TraceStepResult exact = trace_step(prob.oracle, c, rec.x, f, g,
                                               rec.delta, rec.sigma, cfg.fds);
      const double diff =
          (exact.s - rec.s).norm() / std::max(1.0, rec.s.norm());
      worst = std::max(worst, diff);
      if (diff > 1e-6) ++violations;
      ++checked;
    }
  }
  std::ostringstream detail;
  detail << checked << " outer steps over 5 problems, " << violations
         << " violations, max relative step gap " << worst;
  report(3, violations == 0, "exact-limit consistency", detail.str());
}

// --- criteria 4/5/6/9 share the full-suite runs ---------------------------

struct SuiteRuns {
  // label -> problem name -> result
  std::map<std::string, std::map<std::string, SolveResult>> runs;
};

SuiteRuns run_full_suite() {
  SuiteRuns out;
  const std::vector<Problem> suite = problem_suite();
  for (int setting = 1; setting <= 3; ++setting) {
    for (const Problem& prob : suite) {
      ItraceConfig cfg;
      cfg.xi = setting_xi(setting);
      cfg.keep_path = true;
      out.runs["itrace-" + std::to_string(setting)][prob.name] =
          itrace_solve(prob.oracle, prob.start, cfg);
    }
  }
  for (const Problem& prob : suite) {
    ItraceConfig cfg;
    cfg.keep_path = true;
    out.runs["trace"][prob.name] = trace_solve(prob.oracle, prob.start, cfg);
    out.runs["arc"][prob.name] = arc_solve(prob.oracle, prob.start, ArcConfig{});
  }
  return out;
}

void criterion_4(const SuiteRuns& suite) {
  const FdsParams params;  // defaults shared by every suite run
  long calls = 0, violations = 0;
  long prev_nf_mismatch = 0;
  for (const auto& [label, by_problem] : suite.runs) {
    if (label == "arc") continue;  // no FDS machinery in ARC
    for (const auto& [name, res] : by_problem) {
      long prev_nf = 1;  // one objective evaluation before the outer loop
      for (const auto& rec : res.records) {
        long evals = 0;
        for (const auto& trace : rec.fds_traces) {
          ++calls;
          evals += static_cast<long>(trace.size());
          bool ok = !trace.empty();
          for (std::size_t i = 0; ok && i < trace.size(); ++i) {
            const auto& e = trace[i];
            const bool last = (i + 1 == trace.size());
            // Accept exactly once, at the end.
            if (last != (e.cls == StepClass::Accept)) ok = false;
            // Expansion only as the very first move.
            if (e.cls == StepClass::Expand && i != 0) ok = false;
            if (last) {
              if (e.rho < params.eta) ok = false;
              if (e.lambda > params.sigma_hi * e.t_norm * (1.0 + 1e-9))
                ok = false;
            }
            // Along contraction runs the radius strictly shrinks and the
            // multiplier never decreases.
            if (!last && e.cls == StepClass::Contract) {
              const auto& next = trace[i + 1];
              if (!(next.delta < e.delta)) ok = false;
              if (!(next.lambda >= e.lambda * (1.0 - 1e-12))) ok = false;
            }
          }
          if (!ok) ++violations;
        }
        if (evals != rec.fds.evals || rec.n_f - prev_nf != evals) {
          ++prev_nf_mismatch;
        }
        prev_nf = rec.n_f;
      }
    }
  }
  std::ostringstream detail;
  detail << calls << " FDS calls audited, " << violations
         << " trace violations, " << prev_nf_mismatch
         << " evaluation-accounting mismatches";
  report(4, violations == 0 && prev_nf_mismatch == 0 && calls > 0,
         "FDS trace invariants across the suite", detail.str());
}

void criterion_5(const SuiteRuns& suite) {
  const double eta = FdsParams{}.eta;
  long steps = 0, violations = 0;
  for (const auto& [label, by_problem] : suite.runs) {
    if (label == "arc") continue;  // ARC uses a model-ratio acceptance rule
    for (const auto& [name, res] : by_problem) {
      const ComplexityAudit audit =
          complexity_audit(res.records, res.f_final, eta, 0.0);
      for (const auto& cert : audit.decrease_certificates) {
        ++steps;
        if (!cert.ok) ++violations;
      }
    }
  }
  std::ostringstream detail;
  detail << steps << " accepted steps, " << violations << " violations";
  report(5, violations == 0 && steps > 0, "cubic decrease certificates",
         detail.str());
}

void criterion_6(const SuiteRuns& suite) {
  const std::vector<Problem> problems = problem_suite();
  long failures = 0;
  std::string first_failure;
  for (const auto& [label, by_problem] : suite.runs) {
    for (const Problem& prob : problems) {
      const SolveResult& res = by_problem.at(prob.name);
      const double g0 = prob.oracle.eval_grad(prob.start).norm();
      const bool ok = res.status == SolveStatus::Converged &&
                      res.g_norm_final <= 1e-5 * std::max(1.0, g0) &&
                      res.wall_time_s <= 60.0;
      if (!ok) {
        ++failures;
        if (first_failure.empty())
          first_failure = label + " on " + prob.name + ": " +
                          to_string(res.status);
      }
    }
  }

  // Rosenbrock proximity needs a gradient tolerance tighter than the
  // experiment-grade stop, which only pins the iterate to about 1e-4.
  const Problem rosen = lookup_problem("rosenbrock");
  long prox_failures = 0;
  for (int setting = 1; setting <= 3; ++setting) {
    ItraceConfig cfg;
    cfg.xi = setting_xi(setting);
    cfg.grad_tol_rel = 1e-10;
    const SolveResult res = itrace_solve(rosen.oracle, rosen.start, cfg);
    if (!(res.status == SolveStatus::Converged &&
          std::abs(res.x_final[0] - 1.0) <= 1e-6 &&
          std::abs(res.x_final[1] - 1.0) <= 1e-6)) {
      ++prox_failures;
    }
  }
  {
    ItraceConfig cfg;
    cfg.grad_tol_rel = 1e-10;
    const SolveResult res = trace_solve(rosen.oracle, rosen.start, cfg);
    if (!(res.status == SolveStatus::Converged &&
          std::abs(res.x_final[0] - 1.0) <= 1e-6 &&
          std::abs(res.x_final[1] - 1.0) <= 1e-6)) {
      ++prox_failures;
    }
  }
  {
    ArcConfig cfg;
    cfg.grad_tol_rel = 1e-10;
    const SolveResult res = arc_solve(rosen.oracle, rosen.start, cfg);
    if (!(res.status == SolveStatus::Converged &&
          std::abs(res.x_final[0] - 1.0) <= 1e-6 &&
          std::abs(res.x_final[1] - 1.0) <= 1e-6)) {
      ++prox_failures;
    }
  }

  std::ostringstream detail;
  detail << suite.runs.size() << " solvers x " << problems.size()
         << " problems, " << failures << " convergence failures";
  if (!first_failure.empty()) detail << " (first: " << first_failure << ")";
  detail << ", " << prox_failures << " Rosenbrock proximity failures";
  report(6, failures == 0 && prox_failures == 0,
         "full-suite convergence and Rosenbrock proximity", detail.str());
}

void criterion_9(const SuiteRuns& suite) {
  const auto& loose = suite.runs.at("itrace-3");
  const auto& tight = suite.runs.at("itrace-1");
  long wins = 0, total = 0;
  for (const auto& [name, res3] : loose) {
    const auto it = tight.find(name);
    if (it == tight.end()) continue;
    if (res3.status != SolveStatus::Converged ||
        it->second.status != SolveStatus::Converged) {
      continue;
    }
    ++total;
    if (res3.counters.n_hv <= it->second.counters.n_hv) ++wins;
  }
  const double frac = total > 0 ? static_cast<double>(wins) / total : 0.0;
  std::ostringstream detail;
  detail << "loosest setting used no more Hessian products on " << wins << "/"
         << total << " problems (" << 100.0 * frac << "%), gate 70%";
  report(9, frac >= 0.7 && total > 0, "inexactness trade-off trend",
         detail.str(), /*soft=*/true);
}

// --- criterion 7: local quadratic rate ------------------------------------

void criterion_7() {
  const ObjectiveOracle oracle = exp_objective(6);
  VectorXd x0(6);
  for (int i = 0; i < 6; ++i) x0[i] = 1.0 + 0.2 * i;

  ItraceConfig cfg;
  cfg.local_tightening = LocalTightening::Quadratic;
  cfg.grad_tol_rel = 1e-11;
  const SolveResult res = itrace_solve(oracle, x0, cfg);

  bool pass = res.status == SolveStatus::Converged && res.records.size() >= 4;
  double ratio = 0.0;
  if (pass) {
    std::vector<double> gnorms;
    for (const auto& rec : res.records) gnorms.push_back(rec.g_norm);
    gnorms.push_back(res.g_norm_final);
    double cmin = 0.0, cmax = 0.0;
    bool first = true;
    for (std::size_t i = gnorms.size() - 4; i + 1 < gnorms.size(); ++i) {
      if (gnorms[i] <= 0.0) { pass = false; break; }
      const double c = gnorms[i + 1] / (gnorms[i] * gnorms[i]);
      if (first) { cmin = cmax = c; first = false; }
      cmin = std::min(cmin, c);
      cmax = std::max(cmax, c);
    }
    ratio = cmax / std::max(cmin, 1e-300);
    pass = pass && ratio < 10.0;
  }
  std::ostringstream detail;
  detail << "fitted-constant variation over last 3 transitions " << ratio
         << "x, gate 10x";
  report(7, pass, "local quadratic rate under tightening", detail.str());
}

// --- criterion 8: Hessian-vector product accounting -----------------------

void criterion_8() {
  const char* names[] = {"rosenbrock", "rosenbrock-ext-10", "beale",
                         "trigonometric", "chained-rosenbrock"};
  long violations = 0;
  for (const char* name : names) {
    const Problem prob = lookup_problem(name);
    long spy_hv = 0;
    ObjectiveOracle spied = prob.oracle;
    const auto inner_hv = prob.oracle.hess_vec;
    spied.hess_vec = [&spy_hv, inner_hv](const VectorXd& x, const VectorXd& v) {
      ++spy_hv;
      return inner_hv(x, v);
    };

    const SolveResult res = itrace_solve(spied, prob.start, ItraceConfig{});
    long expected = 0;
    for (const auto& rec : res.records) expected += rec.j_final + 1;
    if (res.status != SolveStatus::Converged ||
        res.counters.n_hv != expected || spy_hv != expected) {
      ++violations;
    }
  }
  std::ostringstream detail;
  detail << "5 problems, " << violations << " mismatches between spy count, "
         << "counters, and per-iteration subspace sizes";
  report(8, violations == 0, "Hessian-vector product accounting",
         detail.str());
}

// --- criterion 10: profile machinery --------------------------------------

void criterion_10() {
  auto rec = [](const char* solver, const char* prob, long nf) {
    RunRecord r;
    r.solver = solver;
    r.setting = "1";
    r.problem = prob;
    r.status = "Converged";
    r.n_f = nf;
    return r;
  };
  // Counts (A, B): p1 (2,4), p2 (6,3), p3 (5,5). Ratios A {1,2,1},
  // B {2,1,1}: both 2/3 at tau = 1 and 1 at tau = 2.
  std::vector<RunRecord> records = {rec("A", "p1", 2), rec("B", "p1", 4),
                                    rec("A", "p2", 6), rec("B", "p2", 3),
                                    rec("A", "p3", 5), rec("B", "p3", 5)};
  bool pass = true;
  std::string note = "fractions match hand computation exactly";
  try {
    const auto curves = performance_profile(records, ProfileMetric::NF);
    if (curves.size() != 2) pass = false;
    for (const auto& curve : curves) {
      double at1 = -1.0, at2 = -1.0;
      for (const auto& [tau, frac] : curve.points) {
        if (tau == 1.0) at1 = frac;
        if (tau == 2.0) at2 = frac;
      }
      if (at1 != 2.0 / 3.0 || at2 != 1.0) pass = false;
    }
  } catch (const SolverError& err) {
    pass = false;
    note = err.what();
  }
  report(10, pass, "performance profile hand case", note);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();

  const SuiteRuns suite = run_full_suite();
  criterion_4(suite);
  criterion_5(suite);
  criterion_6(suite);
  criterion_7();
  criterion_8();
  criterion_9(suite);
  criterion_10();

  if (hard_failures > 0) {
    std::printf("%d criteria failed\n", hard_failures);
    return 1;
  }
  std::printf("all gated criteria passed\n");
  return 0;
}
