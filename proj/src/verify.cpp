#include "slipopt/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace slipopt {

namespace {

void check_settings(const SolverSettings& s) {
  if (!(s.tol > 0.0)) throw ConfigError("solver: tol must be positive");
  if (s.max_iters < 1) throw ConfigError("solver: max_iters must be >= 1");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace

SolveResult conjugate_gradient(const std::function<Vector(const Vector&)>& apply, const Vector& rhs,
                               const Vector& start, double tol, int max_iters) {
  SolveResult out;
  out.solution = start;
  Vector r = rhs - apply(start);
  Vector p = r;
  double rr = r.squaredNorm();
  out.residual = std::sqrt(rr);
  while (out.residual > tol && out.iterations < max_iters) {
    const Vector ap = apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) throw SolverError("conjugate gradient: operator is not positive definite", out.residual, out.iterations);
    const double step = rr / pap;
    out.solution += step * p;
    r -= step * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
    out.residual = std::sqrt(rr);
    ++out.iterations;
  }
  return out;
}

SolveResult inner_solve(const Objective& objective, const Vector& x, const SolverSettings& settings, double step,
                        const Vector* start) {
  check_settings(settings);
  const int dy = objective.dim_y();
  SolveResult out;
  out.solution = start != nullptr ? *start : Vector::Zero(dy);
  check_dimensions(objective, x, out.solution);
  if (settings.method == SolverMethod::GradientDescent && !(step > 0.0)) {
    throw ConfigError("inner_solve: gradient descent needs a positive step");
  }

  Vector g = objective.grad_y_lower(x, out.solution);
  out.residual = g.norm();
  while (out.residual > settings.tol) {
    if (out.iterations >= settings.max_iters) {
      throw SolverError("inner_solve: no convergence after " + std::to_string(out.iterations) +
                            " iterations, |grad_y g| = " + num(out.residual),
                        out.residual, out.iterations);
    }
    if (settings.method == SolverMethod::GradientDescent) {
      out.solution -= step * g;
      g = objective.grad_y_lower(x, out.solution);
    } else {
      Vector d;
      if (settings.method == SolverMethod::Newton) {
        d = objective.hess_yy_lower(x, out.solution).ldlt().solve(g);
      } else {
        const Vector y = out.solution;
        auto apply = [&](const Vector& v) { return objective.hvp_yy_lower(x, y, v); };
        d = conjugate_gradient(apply, g, Vector::Zero(dy), 1e-3 * std::min(1.0, out.residual) * out.residual, 10 * dy)
                .solution;
      }
      // Armijo backtracking; near the optimum function values stop resolving
      // the decrease, so a step that shrinks the gradient is also accepted.
      const double f0 = objective.lower(x, out.solution);
      const double slope = g.dot(d);
      double t = 1.0;
      Vector trial;
      Vector g_trial;
      for (int k = 0; k < 60; ++k) {
        trial = out.solution - t * d;
        g_trial = objective.grad_y_lower(x, trial);
        const double f1 = objective.lower(x, trial);
        if (f1 <= f0 - 1e-4 * t * slope || g_trial.norm() < out.residual) break;
        t *= 0.5;
      }
      out.solution = trial;
      g = g_trial;
    }
    out.residual = g.norm();
    ++out.iterations;
    if (!std::isfinite(out.residual)) throw SolverError("inner_solve: iterate became non-finite", out.residual, out.iterations);
  }
  return out;
}

Vector inner_solve_exact(const BilevelProblem& problem, const Vector& x, const SolverSettings& settings) {
  if (!(problem.constants.mu > 0.0)) throw ConfigError("inner_solve_exact: declared mu must be positive");
  const double step = problem.constants.l_g1 > 0.0 ? 1.0 / problem.constants.l_g1 : 0.0;
  return inner_solve(*problem.objective, x, settings, step).solution;
}

SolveResult solve_linear_system(const Objective& objective, const Vector& x, const Vector& y,
                                const SolverSettings& settings, double step) {
  check_settings(settings);
  check_dimensions(objective, x, y);
  const int dy = objective.dim_y();
  const Vector b = objective.grad_y_upper(x, y);
  auto apply = [&](const Vector& v) { return objective.hvp_yy_lower(x, y, v); };
  auto residual = [&](const Vector& z) { return (apply(z) - b).norm(); };

  SolveResult out;
  if (settings.method == SolverMethod::GradientDescent) {
    if (!(step > 0.0)) throw ConfigError("solve_linear_system: gradient descent needs a positive step");
    out.solution = Vector::Zero(dy);
    out.residual = residual(out.solution);
    while (out.residual > settings.tol && out.iterations < settings.max_iters) {
      out.solution -= step * (apply(out.solution) - b);
      out.residual = residual(out.solution);
      ++out.iterations;
    }
  } else if (settings.method == SolverMethod::Newton || dy <= 64) {
    const auto ldlt = objective.hess_yy_lower(x, y).ldlt();
    out.solution = ldlt.solve(b);
    out.residual = residual(out.solution);
    // Iterative refinement absorbs factorization round-off.
    for (int k = 0; k < 3 && out.residual > settings.tol; ++k) {
      out.solution -= ldlt.solve(apply(out.solution) - b);
      out.residual = residual(out.solution);
    }
    out.iterations = 1;
  } else {
    out = conjugate_gradient(apply, b, Vector::Zero(dy), settings.tol, settings.max_iters);
    out.residual = residual(out.solution);
  }
  if (!(out.residual <= settings.tol)) {
    throw SolverError("solve_linear_system: residual " + num(out.residual) + " above tol " + num(settings.tol),
                      out.residual, out.iterations);
  }
  return out;
}

Vector solve_linear_system_exact(const BilevelProblem& problem, const Vector& x, const Vector& y,
                                 const SolverSettings& settings) {
  const double step = problem.constants.l_g1 > 0.0 ? 1.0 / problem.constants.l_g1 : 0.0;
  return solve_linear_system(*problem.objective, x, y, settings, step).solution;
}

Vector finite_diff_hypergrad(const BilevelProblem& problem, const Vector& x, double h,
                             const SolverSettings& settings) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_hypergrad: h must be positive");
  if (settings.tol > h * h) {
    throw ConfigError("finite_diff_hypergrad: inner tolerance " + num(settings.tol) + " exceeds h^2 = " + num(h * h));
  }
  const Objective& obj = *problem.objective;
  auto phi_hat = [&](const Vector& p) { return obj.upper(p, inner_solve_exact(problem, p, settings)); };
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = phi_hat(probe);
    probe[i] = x[i] - h;
    const double down = phi_hat(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double violation_allowance(double delta, std::int64_t n) {
  if (n < 1) throw ConfigError("violation_allowance: n must be positive");
  return delta + 2.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(n));
}

WarmStartReport check_warm_start(const BilevelProblem& problem, double alpha_init, std::int64_t T0, double L1,
                                 std::int64_t n_seeds, double delta, const Vector& x0, const Vector& y0_init,
                                 std::uint64_t base_seed) {
  if (n_seeds < 100) throw ConfigError("check_warm_start: needs at least 100 seeds, got " + std::to_string(n_seeds));
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("check_warm_start: delta must lie in [0, 1]");
  if (!(L1 > 0.0)) throw ConfigError("check_warm_start: L1 must be positive");
  if (T0 < 0) throw ConfigError("check_warm_start: T0 must be >= 0");

  const Vector reference = problem.analytic ? problem.analytic->y_star(x0) : inner_solve_exact(problem, x0);
  WarmStartReport rep;
  rep.seeds = n_seeds;
  rep.threshold = 1.0 / (8.0 * std::sqrt(2.0) * L1);
  rep.allowance = violation_allowance(delta, n_seeds);
  for (std::int64_t i = 0; i < n_seeds; ++i) {
    const std::uint64_t seed = mix64(base_seed + static_cast<std::uint64_t>(i));
    const SgdDdResult r = sgd_dd(problem, x0, y0_init, alpha_init, T0, seed);
    const double dist = (r.y - reference).norm();
    rep.worst_distance = std::max(rep.worst_distance, dist);
    if (dist > rep.threshold) ++rep.violations;
  }
  rep.violation_rate = static_cast<double>(rep.violations) / static_cast<double>(n_seeds);
  rep.pass = rep.violation_rate <= rep.allowance;
  return rep;
}

double bias_bound(const SmoothnessConstants& c, const BiasObservation& o, double z_scale) {
  const double y_coeff = c.L_x0 + c.L_x1 * c.l_g1 * c.l_f0 / c.mu + c.l_g2 * c.l_f0 / c.mu;
  return c.L_x1 * o.y_err * o.grad_norm + y_coeff * o.y_err + c.l_g1 * z_scale * o.z_err;
}

BiasReport check_bias_decomposition(const BilevelProblem& problem, const std::vector<BiasObservation>& rows,
                                    double z_scale) {
  if (!problem.oracle.noiseless()) {
    throw ConfigError("check_bias_decomposition: requires a noiseless run; a noisy estimate is not its expectation");
  }
  BiasReport rep;
  rep.rows = static_cast<std::int64_t>(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double rhs = bias_bound(problem.constants, rows[i], z_scale);
    double ratio = 0.0;
    if (rhs > 0.0) {
      ratio = rows[i].lhs / rhs;
    } else if (rows[i].lhs > 0.0) {
      ratio = std::numeric_limits<double>::infinity();
    }
    if (rep.worst_row < 0 || ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.worst_row = static_cast<std::int64_t>(i);
    }
  }
  rep.pass = rep.max_ratio <= 1.0;
  return rep;
}

std::vector<BiasObservation> collect_bias_observations(const BilevelProblem& problem, const ParamSchedule& schedule,
                                                       const InitialPoint& init, std::uint64_t seed) {
  if (!problem.analytic) throw ConfigError("collect_bias_observations: needs an analytic oracle");
  std::vector<BiasObservation> rows;
  rows.reserve(static_cast<std::size_t>(schedule.T));
  RunOptions opts;
  opts.record_trace = false;
  opts.hook = [&](const IterationEvent& ev) {
    const AnalyticPoint a = problem.analytic->evaluate(ev.before.x);
    BiasObservation o;
    o.lhs = (ev.estimate - a.hypergrad).norm();
    o.y_err = (ev.before.y - a.y_star).norm();
    o.z_err = (ev.before.z - a.z_star).norm();
    o.grad_norm = a.hypergrad.norm();
    rows.push_back(o);
  };
  slip_run(problem, schedule, init, seed, opts);
  return rows;
}

}  // namespace slipopt
