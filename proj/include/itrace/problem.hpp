#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "itrace/errors.hpp"

namespace itrace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Matrix-free description of an unconstrained smooth objective.
/// The Hessian is exposed only through Hessian-vector products; an
/// optional dense-Hessian hook is provided for exact full-space
/// baselines on small problems.
struct ObjectiveOracle {
  int n = 0;
  std::function<double(const VectorXd&)> eval_f;
  std::function<VectorXd(const VectorXd&)> eval_grad;
  std::function<VectorXd(const VectorXd&, const VectorXd&)> hess_vec;
  std::function<MatrixXd(const VectorXd&)> dense_hessian;  // may be empty

  bool has_dense_hessian() const { return static_cast<bool>(dense_hessian); }
};

/// Evaluation counters owned by the solve call, never by the oracle.
struct Counters {
  long n_f = 0;
  long n_g = 0;
  long n_hv = 0;
};

inline double eval_f_counted(const ObjectiveOracle& oracle, Counters& counters,
                             const VectorXd& x) {
  const double f = oracle.eval_f(x);
  ++counters.n_f;
  if (!std::isfinite(f)) throw NonFiniteObjective("objective is not finite");
  return f;
}

inline VectorXd eval_grad_counted(const ObjectiveOracle& oracle,
                                  Counters& counters, const VectorXd& x) {
  VectorXd g = oracle.eval_grad(x);
  ++counters.n_g;
  if (!g.allFinite()) throw NonFiniteGradient("gradient has non-finite components");
  return g;
}

inline VectorXd hess_vec_counted(const ObjectiveOracle& oracle,
                                 Counters& counters, const VectorXd& x,
                                 const VectorXd& v) {
  VectorXd hv = oracle.hess_vec(x, v);
  ++counters.n_hv;
  if (!hv.allFinite()) throw NonFiniteHessVec("Hessian-vector product has non-finite components");
  return hv;
}

struct DerivativeReport {
  double max_grad_rel_err = 0.0;
  double max_hv_rel_err = 0.0;
  double symmetry_err = 0.0;
};

/// Compares the analytic gradient against central differences of f and
/// the Hessian-vector product against central differences of the
/// gradient. Also probes u'Hw = w'Hu on a fixed pair of directions.
inline DerivativeReport check_derivatives(const ObjectiveOracle& oracle,
                                          const VectorXd& x, double step) {
  DerivativeReport report;
  const int n = oracle.n;
  const VectorXd g = oracle.eval_grad(x);
  const double gscale = std::max(1.0, g.norm());

  for (int i = 0; i < n; ++i) {
    VectorXd xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    const double gi = (oracle.eval_f(xp) - oracle.eval_f(xm)) / (2.0 * step);
    const double err = std::abs(gi - g[i]) / gscale;
    report.max_grad_rel_err = std::max(report.max_grad_rel_err, err);
  }

  // Hv against FD of the gradient along coordinate directions.
  for (int i = 0; i < std::min(n, 8); ++i) {
    VectorXd v = VectorXd::Zero(n);
    v[i] = 1.0;
    const VectorXd hv = oracle.hess_vec(x, v);
    VectorXd xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    const VectorXd hv_fd = (oracle.eval_grad(xp) - oracle.eval_grad(xm)) / (2.0 * step);
    const double err = (hv - hv_fd).norm() / std::max(1.0, hv.norm());
    report.max_hv_rel_err = std::max(report.max_hv_rel_err, err);
  }

  VectorXd u(n), w(n);
  for (int i = 0; i < n; ++i) {
    u[i] = std::sin(1.0 + i);
    w[i] = std::cos(2.0 + 0.5 * i);
  }
  const VectorXd hu = oracle.hess_vec(x, u);
  const VectorXd hw = oracle.hess_vec(x, w);
  const double denom = u.norm() * w.norm() * (1.0 + hu.norm());
  report.symmetry_err = std::abs(u.dot(hw) - w.dot(hu)) / denom;
  return report;
}

/// A named test problem: oracle plus documented start point and the
/// best-known objective value.
struct Problem {
  std::string name;
  ObjectiveOracle oracle;
  VectorXd start;
  double f_best = 0.0;
};

namespace detail {

inline Problem make_ext_rosenbrock(const std::string& name, int n) {
  // Pairwise-separable extended Rosenbrock; minimizer is the all-ones
  // vector with f = 0.
  ObjectiveOracle o;
  o.n = n;
  o.eval_f = [n](const VectorXd& x) {
    double f = 0.0;
    for (int i = 0; i + 1 < n; i += 2) {
      const double a = x[i + 1] - x[i] * x[i];
      const double b = 1.0 - x[i];
      f += 100.0 * a * a + b * b;
    }
    return f;
  };
  o.eval_grad = [n](const VectorXd& x) {
    VectorXd g = VectorXd::Zero(n);
    for (int i = 0; i + 1 < n; i += 2) {
      const double a = x[i + 1] - x[i] * x[i];
      g[i] = -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
      g[i + 1] = 200.0 * a;
    }
    return g;
  };
  o.hess_vec = [n](const VectorXd& x, const VectorXd& v) {
    VectorXd hv = VectorXd::Zero(n);
    for (int i = 0; i + 1 < n; i += 2) {
      const double h11 = 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
      const double h12 = -400.0 * x[i];
      hv[i] = h11 * v[i] + h12 * v[i + 1];
      hv[i + 1] = h12 * v[i] + 200.0 * v[i + 1];
    }
    return hv;
  };
  o.dense_hessian = [n](const VectorXd& x) {
    MatrixXd h = MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; i += 2) {
      h(i, i) = 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
      h(i, i + 1) = h(i + 1, i) = -400.0 * x[i];
      h(i + 1, i + 1) = 200.0;
    }
    return h;
  };
  VectorXd start(n);
  for (int i = 0; i < n; ++i) start[i] = (i % 2 == 0) ? -1.2 : 1.0;
  return Problem{name, std::move(o), std::move(start), 0.0};
}

inline Problem make_chained_rosenbrock(const std::string& name, int n) {
  // Overlapping variant; tridiagonal Hessian, minimizer all ones.
  ObjectiveOracle o;
  o.n = n;
  o.eval_f = [n](const VectorXd& x) {
    double f = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
      const double a = x[i + 1] - x[i] * x[i];
      const double b = 1.0 - x[i];
      f += 100.0 * a * a + b * b;
    }
    return f;
  };
  o.eval_grad = [n](const VectorXd& x) {
    VectorXd g = VectorXd::Zero(n);
    for (int i = 0; i + 1 < n; ++i) {
      const double a = x[i + 1] - x[i] * x[i];
      g[i] += -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
      g[i + 1] += 200.0 * a;
    }
    return g;
  };
  o.dense_hessian = [n](const VectorXd& x) {
    MatrixXd h = MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
      h(i, i) += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
      h(i, i + 1) += -400.0 * x[i];
      h(i + 1, i) += -400.0 * x[i];
      h(i + 1, i + 1) += 200.0;
    }
    return h;
  };
  o.hess_vec = [n](const VectorXd& x, const VectorXd& v) {
    VectorXd hv = VectorXd::Zero(n);
    for (int i = 0; i + 1 < n; ++i) {
      const double d = 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
      const double od = -400.0 * x[i];
      hv[i] += d * v[i] + od * v[i + 1];
      hv[i + 1] += od * v[i] + 200.0 * v[i + 1];
    }
    return hv;
  };
  VectorXd start(n);
  for (int i = 0; i < n; ++i) start[i] = (i % 2 == 0) ? -1.2 : 1.0;
  return Problem{name, std::move(o), std::move(start), 0.0};
}

inline Problem make_quadratic(const std::string& name, int n, double cond) {
  // f(x) = 1/2 x'Dx with D log-spaced in [1, cond].
  VectorXd d(n);
  for (int i = 0; i < n; ++i) {
    const double frac = (n == 1) ? 0.0 : static_cast<double>(i) / (n - 1);
    d[i] = std::pow(cond, frac);
  }
  ObjectiveOracle o;
  o.n = n;
  o.eval_f = [d](const VectorXd& x) { return 0.5 * x.dot(d.cwiseProduct(x)); };
  o.eval_grad = [d](const VectorXd& x) { return VectorXd(d.cwiseProduct(x)); };
  o.hess_vec = [d](const VectorXd&, const VectorXd& v) {
    return VectorXd(d.cwiseProduct(v));
  };
  o.dense_hessian = [d](const VectorXd&) { return MatrixXd(d.asDiagonal()); };
  VectorXd start = VectorXd::Ones(n);
  return Problem{name, std::move(o), std::move(start), 0.0};
}

inline Problem make_quartic_saddle(const std::string& name, int n) {
  // f(x) = 1/4 sum x_i^4 - 1/2 sum x_i^2; saddle at the origin,
  // minimizers at x_i = +-1 with f = -n/4.
  ObjectiveOracle o;
  o.n = n;
  o.eval_f = [](const VectorXd& x) {
    return 0.25 * x.array().pow(4).sum() - 0.5 * x.squaredNorm();
  };
  o.eval_grad = [](const VectorXd& x) {
    return VectorXd(x.array().cube() - x.array());
  };
  o.hess_vec = [](const VectorXd& x, const VectorXd& v) {
    return VectorXd((3.0 * x.array().square() - 1.0) * v.array());
  };
  o.dense_hessian = [](const VectorXd& x) {
    return MatrixXd(VectorXd(3.0 * x.array().square() - 1.0).asDiagonal());
  };
  VectorXd start(n);
  for (int i = 0; i < n; ++i) start[i] = 2.0 + 0.1 * (i % 3);
  return Problem{name, std::move(o), std::move(start), -0.25 * n};
}

inline Problem make_trigonometric(const std::string& name, int n) {
  // More-Garbow-Hillstrom trigonometric function, sum-of-squares form.
  auto residuals = [n](const VectorXd& x) {
    const double cos_sum = x.array().cos().sum();
    VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      r[i] = n - cos_sum + (i + 1) * (1.0 - std::cos(x[i])) - std::sin(x[i]);
    }
    return r;
  };
  ObjectiveOracle o;
  o.n = n;
  o.eval_f = [residuals](const VectorXd& x) {
    return residuals(x).squaredNorm();
  };
  auto jacobian = [n](const VectorXd& x) {
    MatrixXd jac(n, n);
    for (int i = 0; i < n; ++i) {
      for (int jj = 0; jj < n; ++jj) {
        jac(i, jj) = std::sin(x[jj]);
        if (i == jj) jac(i, jj) += (i + 1) * std::sin(x[i]) - std::cos(x[i]);
      }
    }
    return jac;
  };
  o.eval_grad = [residuals, jacobian](const VectorXd& x) {
    return VectorXd(2.0 * jacobian(x).transpose() * residuals(x));
  };
  o.dense_hessian = [n, residuals, jacobian](const VectorXd& x) {
    const VectorXd r = residuals(x);
    const MatrixXd jac = jacobian(x);
    MatrixXd h = 2.0 * jac.transpose() * jac;
    // Second-derivative term: each residual has a diagonal Hessian.
    const double r_sum = r.sum();
    for (int jj = 0; jj < n; ++jj) {
      double d = std::cos(x[jj]) * r_sum +
                 r[jj] * ((jj + 1) * std::cos(x[jj]) + std::sin(x[jj]));
      h(jj, jj) += 2.0 * d;
    }
    return h;
  };
  o.hess_vec = [o](const VectorXd& x, const VectorXd& v) {
    return VectorXd(o.dense_hessian(x) * v);
  };
  VectorXd start = VectorXd::Constant(n, 1.0 / n);
  return Problem{name, std::move(o), std::move(start), 0.0};
}

inline Problem make_from_dense(const std::string& name, int n,
                               std::function<double(const VectorXd&)> f,
                               std::function<VectorXd(const VectorXd&)> g,
                               std::function<MatrixXd(const VectorXd&)> h,
                               VectorXd start, double f_best) {
  ObjectiveOracle o;
  o.n = n;
  o.eval_f = std::move(f);
  o.eval_grad = std::move(g);
  o.dense_hessian = std::move(h);
  o.hess_vec = [o](const VectorXd& x, const VectorXd& v) {
    return VectorXd(o.dense_hessian(x) * v);
  };
  return Problem{name, std::move(o), std::move(start), f_best};
}

inline Problem make_beale() {
  auto f = [](const VectorXd& x) {
    const double a = 1.5 - x[0] + x[0] * x[1];
    const double b = 2.25 - x[0] + x[0] * x[1] * x[1];
    const double c = 2.625 - x[0] + x[0] * x[1] * x[1] * x[1];
    return a * a + b * b + c * c;
  };
  auto g = [](const VectorXd& x) {
    const double y = x[1];
    const double a = 1.5 - x[0] + x[0] * y;
    const double b = 2.25 - x[0] + x[0] * y * y;
    const double c = 2.625 - x[0] + x[0] * y * y * y;
    VectorXd grad(2);
    grad[0] = 2.0 * a * (y - 1.0) + 2.0 * b * (y * y - 1.0) +
              2.0 * c * (y * y * y - 1.0);
    grad[1] = 2.0 * a * x[0] + 2.0 * b * 2.0 * x[0] * y +
              2.0 * c * 3.0 * x[0] * y * y;
    return grad;
  };
  auto h = [](const VectorXd& x) {
    const double y = x[1];
    const double a = 1.5 - x[0] + x[0] * y;
    const double b = 2.25 - x[0] + x[0] * y * y;
    const double c = 2.625 - x[0] + x[0] * y * y * y;
    const double ax = y - 1.0, ay = x[0];
    const double bx = y * y - 1.0, by = 2.0 * x[0] * y;
    const double cx = y * y * y - 1.0, cy = 3.0 * x[0] * y * y;
    MatrixXd hess(2, 2);
    hess(0, 0) = 2.0 * (ax * ax + bx * bx + cx * cx);
    hess(0, 1) = 2.0 * (ax * ay + a + bx * by + b * 2.0 * y + cx * cy +
                        c * 3.0 * y * y);
    hess(1, 0) = hess(0, 1);
    hess(1, 1) = 2.0 * (ay * ay + by * by + cy * cy + b * 2.0 * x[0] +
                        c * 6.0 * x[0] * y);
    return hess;
  };
  VectorXd start(2);
  start << 1.0, 1.0;
  return make_from_dense("beale", 2, f, g, h, start, 0.0);
}

inline Problem make_booth() {
  auto f = [](const VectorXd& x) {
    const double a = x[0] + 2.0 * x[1] - 7.0;
    const double b = 2.0 * x[0] + x[1] - 5.0;
    return a * a + b * b;
  };
  auto g = [](const VectorXd& x) {
    const double a = x[0] + 2.0 * x[1] - 7.0;
    const double b = 2.0 * x[0] + x[1] - 5.0;
    VectorXd grad(2);
    grad[0] = 2.0 * a + 4.0 * b;
    grad[1] = 4.0 * a + 2.0 * b;
    return grad;
  };
  auto h = [](const VectorXd&) {
    MatrixXd hess(2, 2);
    hess << 10.0, 8.0, 8.0, 10.0;
    return hess;
  };
  VectorXd start = VectorXd::Zero(2);
  return make_from_dense("booth", 2, f, g, h, start, 0.0);
}

inline Problem make_himmelblau() {
  auto f = [](const VectorXd& x) {
    const double a = x[0] * x[0] + x[1] - 11.0;
    const double b = x[0] + x[1] * x[1] - 7.0;
    return a * a + b * b;
  };
  auto g = [](const VectorXd& x) {
    const double a = x[0] * x[0] + x[1] - 11.0;
    const double b = x[0] + x[1] * x[1] - 7.0;
    VectorXd grad(2);
    grad[0] = 4.0 * a * x[0] + 2.0 * b;
    grad[1] = 2.0 * a + 4.0 * b * x[1];
    return grad;
  };
  auto h = [](const VectorXd& x) {
    const double a = x[0] * x[0] + x[1] - 11.0;
    const double b = x[0] + x[1] * x[1] - 7.0;
    MatrixXd hess(2, 2);
    hess(0, 0) = 12.0 * x[0] * x[0] + 4.0 * x[1] - 44.0 + 2.0;
    hess(0, 1) = 4.0 * x[0] + 4.0 * x[1];
    hess(1, 0) = hess(0, 1);
    hess(1, 1) = 2.0 + 12.0 * x[1] * x[1] + 4.0 * x[0] - 28.0;
    (void)a; (void)b;
    return hess;
  };
  VectorXd start(2);
  start << 0.5, -0.5;
  return make_from_dense("himmelblau", 2, f, g, h, start, 0.0);
}

}  // namespace detail

/// Native desk-scale test suite standing in for a SIF/CUTEst collection.
inline std::vector<Problem> problem_suite() {
  std::vector<Problem> suite;
  suite.push_back(detail::make_ext_rosenbrock("rosenbrock", 2));
  suite.push_back(detail::make_ext_rosenbrock("rosenbrock-ext-10", 10));
  suite.push_back(detail::make_ext_rosenbrock("rosenbrock-ext-100", 100));
  suite.push_back(detail::make_chained_rosenbrock("chained-rosenbrock", 25));
  suite.push_back(detail::make_quadratic("quadratic-1", 50, 1.0));
  suite.push_back(detail::make_quadratic("quadratic-1e3", 50, 1.0e3));
  suite.push_back(detail::make_quadratic("quadratic-1e6", 50, 1.0e6));
  suite.push_back(detail::make_quartic_saddle("quartic-saddle", 10));
  suite.push_back(detail::make_trigonometric("trigonometric", 10));
  suite.push_back(detail::make_beale());
  suite.push_back(detail::make_booth());
  suite.push_back(detail::make_himmelblau());
  return suite;
}

inline Problem lookup_problem(const std::string& name) {
  for (auto& p : problem_suite()) {
    if (p.name == name) return p;
  }
  throw UnknownProblem("unknown problem: " + name);
}

}  // namespace itrace
