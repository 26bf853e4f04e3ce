#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "itrace/baselines.hpp"
#include "itrace/solver.hpp"

namespace itrace {

enum class SolverKind { Itrace, Trace, Arc };

inline std::string to_string(SolverKind k) {
  switch (k) {
    case SolverKind::Itrace: return "itrace";
    case SolverKind::Trace: return "trace";
    default: return "arc";
  }
}

struct SolverSpec {
  SolverKind kind = SolverKind::Itrace;
  int setting = 2;  // 1..3, maps to the (xi1,xi2) / kappa_theta triples

  std::string label() const {
    return to_string(kind) + "-" + std::to_string(setting);
  }
};

struct RunLimits {
  double time_limit_s = 60.0;
  long max_outer_iters = 100000;
};

struct RunRecord {
  std::string solver;
  std::string setting;
  std::string problem;
  int n = 0;
  std::string status;
  double f_final = 0.0;
  double g_norm_final = 0.0;
  long n_f = 0, n_g = 0, n_hv = 0;
  long outer_iters = 0;
  double wall_time_s = 0.0;
};

/// The three inexactness settings used in the experiments.
inline InexactnessParams setting_xi(int setting) {
  InexactnessParams xi;
  switch (setting) {
    case 1: xi.xi1 = 0.1; xi.xi2 = 0.01; break;
    case 2: xi.xi1 = 1.0; xi.xi2 = 0.1; break;
    default: xi.xi1 = 9.0; xi.xi2 = 0.9; break;
  }
  xi.xi3 = 1e6;
  return xi;
}

inline double setting_kappa_theta(int setting) {
  switch (setting) {
    case 1: return 0.01;
    case 2: return 0.1;
    default: return 0.9;
  }
}

inline SolveResult dispatch_solve(const SolverSpec& spec, const Problem& prob,
                                  const RunLimits& limits) {
  if (spec.kind == SolverKind::Arc) {
    ArcConfig cfg;
    cfg.kappa_theta = setting_kappa_theta(spec.setting);
    cfg.time_limit_s = limits.time_limit_s;
    cfg.max_outer_iters = limits.max_outer_iters;
    return arc_solve(prob.oracle, prob.start, cfg);
  }
  ItraceConfig cfg;
  cfg.xi = setting_xi(spec.setting);
  cfg.time_limit_s = limits.time_limit_s;
  cfg.max_outer_iters = limits.max_outer_iters;
  if (spec.kind == SolverKind::Trace) {
    return trace_solve(prob.oracle, prob.start, cfg);
  }
  return itrace_solve(prob.oracle, prob.start, cfg);
}

/// Runs each (solver, problem) pair independently; per-run failures are
/// recorded in the status column and never abort the batch.
inline std::vector<RunRecord> run_benchmark(const std::vector<SolverSpec>& solvers,
                                            const std::vector<Problem>& problems,
                                            const RunLimits& limits = {}) {
  std::vector<RunRecord> records;
  for (const auto& spec : solvers) {
    for (const auto& prob : problems) {
      RunRecord rec;
      rec.solver = to_string(spec.kind);
      rec.setting = std::to_string(spec.setting);
      rec.problem = prob.name;
      rec.n = prob.oracle.n;
      try {
        SolveResult res = dispatch_solve(spec, prob, limits);
        rec.status = to_string(res.status);
        rec.f_final = res.f_final;
        rec.g_norm_final = res.g_norm_final;
        rec.n_f = res.counters.n_f;
        rec.n_g = res.counters.n_g;
        rec.n_hv = res.counters.n_hv;
        rec.outer_iters = static_cast<long>(res.records.size());
        rec.wall_time_s = res.wall_time_s;
      } catch (const SolverError&) {
        rec.status = "Error";
      }
      records.push_back(std::move(rec));
    }
  }
  return records;
}

enum class ProfileMetric { NF, NG, NHV };

inline long metric_of(const RunRecord& rec, ProfileMetric m) {
  switch (m) {
    case ProfileMetric::NF: return rec.n_f;
    case ProfileMetric::NG: return rec.n_g;
    default: return rec.n_hv;
  }
}

struct ProfileCurve {
  std::string solver;
  std::vector<std::pair<double, double>> points;  // (tau, fraction)
};

/// Dolan-More performance profiles over the problems that every solver
/// converged on; ratio base is the per-problem best metric value.
inline std::vector<ProfileCurve> performance_profile(
    const std::vector<RunRecord>& records, ProfileMetric metric,
    double tau_max = 20.0) {
  std::map<std::string, std::map<std::string, const RunRecord*>> by_solver;
  for (const auto& rec : records) {
    by_solver[rec.solver + "-" + rec.setting][rec.problem] = &rec;
  }
  if (by_solver.size() < 2)
    throw EmptyComparison("performance profiles need at least two solvers");

  // Problems every solver converged on.
  std::vector<std::string> base;
  {
    const auto& first = by_solver.begin()->second;
    for (const auto& [prob, rec] : first) {
      bool all = true;
      for (const auto& [label, runs] : by_solver) {
        auto it = runs.find(prob);
        if (it == runs.end() || it->second->status != "Converged") {
          all = false;
          break;
        }
      }
      (void)rec;
      if (all) base.push_back(prob);
    }
  }
  if (base.empty())
    throw EmptyComparison("no problem was solved by every solver");

  std::map<std::string, std::vector<double>> ratios;
  std::set<double> taus;
  taus.insert(1.0);
  for (const auto& prob : base) {
    double best = 0.0;
    bool first = true;
    for (const auto& [label, runs] : by_solver) {
      const double v = static_cast<double>(metric_of(*runs.at(prob), metric));
      if (first || v < best) best = v;
      first = false;
    }
    best = std::max(best, 1.0);
    for (const auto& [label, runs] : by_solver) {
      const double r = static_cast<double>(metric_of(*runs.at(prob), metric)) / best;
      ratios[label].push_back(r);
      if (r <= tau_max) taus.insert(r);
    }
  }

  std::vector<ProfileCurve> curves;
  for (const auto& [label, rs] : ratios) {
    ProfileCurve curve;
    curve.solver = label;
    for (double tau : taus) {
      long count = 0;
      for (double r : rs) {
        if (r <= tau) ++count;
      }
      curve.points.emplace_back(tau, static_cast<double>(count) / base.size());
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

namespace detail {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline void export_csv(const std::vector<RunRecord>& records,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "solver,setting,problem,n,status,f_final,g_norm_final,n_f,n_g,n_hv,"
         "outer_iters,wall_time_s\r\n";
  for (const auto& r : records) {
    out << r.solver << ',' << r.setting << ',' << r.problem << ',' << r.n << ','
        << r.status << ',' << detail::fmt17(r.f_final) << ','
        << detail::fmt17(r.g_norm_final) << ',' << r.n_f << ',' << r.n_g << ','
        << r.n_hv << ',' << r.outer_iters << ','
        << detail::fmt17(r.wall_time_s) << "\r\n";
  }
  if (!out) throw IoError("write failure on " + path);
}

inline std::vector<RunRecord> import_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::vector<RunRecord> records;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) { header = false; continue; }
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 12) throw IoError("malformed record row in " + path);
    RunRecord r;
    r.solver = fields[0];
    r.setting = fields[1];
    r.problem = fields[2];
    r.n = std::stoi(fields[3]);
    r.status = fields[4];
    r.f_final = std::stod(fields[5]);
    r.g_norm_final = std::stod(fields[6]);
    r.n_f = std::stol(fields[7]);
    r.n_g = std::stol(fields[8]);
    r.n_hv = std::stol(fields[9]);
    r.outer_iters = std::stol(fields[10]);
    r.wall_time_s = std::stod(fields[11]);
    records.push_back(std::move(r));
  }
  return records;
}

inline void export_profile_csv(const std::vector<ProfileCurve>& curves,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "solver,tau,fraction\r\n";
  for (const auto& c : curves) {
    for (const auto& [tau, frac] : c.points) {
      out << c.solver << ',' << detail::fmt17(tau) << ','
          << detail::fmt17(frac) << "\r\n";
    }
  }
  if (!out) throw IoError("write failure on " + path);
}

}  // namespace itrace
