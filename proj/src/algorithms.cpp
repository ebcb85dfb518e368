#include "slipopt/algorithms.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "slipopt/verify.hpp"

namespace slipopt {

namespace {

enum class XRule { Normalized, Plain };

struct EngineConfig {
  XRule rule = XRule::Normalized;
  bool momentum = true;
  std::int64_t refine_interval = 0;
  std::int64_t refine_steps = 0;
  bool ttsa = false;
  TtsaSettings ttsa_settings;
};

bool finite(const Vector& v) { return v.allFinite(); }

void add_calls(TraceRecord& row, const OracleCounter& c) {
  row.calls_gxF = c.n_grad_x_F;
  row.calls_gyF = c.n_grad_y_F;
  row.calls_gyG = c.n_grad_y_G;
  row.calls_hxy = c.n_hvp_xy;
  row.calls_hyy = c.n_hvp_yy;
}

TraceRecord metrics(const BilevelProblem& problem, const SlipState& before, const Vector& m_next,
                    const OracleCounter& calls, const RunOptions& options) {
  TraceRecord row;
  row.t = before.t;
  add_calls(row, calls);
  if (problem.analytic) {
    const AnalyticPoint a = problem.analytic->evaluate(before.x);
    row.grad_norm = a.hypergrad.norm();
    row.y_err = (before.y - a.y_star).norm();
    row.z_err = (before.z - a.z_star).norm();
    row.eps_err = (m_next - a.hypergrad).norm();
    row.phi = problem.objective->upper(before.x, a.y_star);
  } else if (options.fd_every > 0 && before.t % options.fd_every == 0) {
    const Vector g = finite_diff_hypergrad(problem, before.x);
    row.grad_norm = g.norm();
    row.eps_err = (m_next - g).norm();
    row.phi = problem.objective->upper(before.x, inner_solve_exact(problem, before.x));
  }
  return row;
}

RunResult run_engine(const BilevelProblem& problem, const ParamSchedule& schedule, const InitialPoint& init,
                     std::uint64_t seed, const RunOptions& options, const EngineConfig& cfg) {
  validate_schedule(schedule);
  const Objective& obj = *problem.objective;
  check_dimensions(obj, init.x0, init.y0_init, &init.z0);
  if (cfg.refine_steps < 0 || (cfg.refine_steps > 0 && cfg.refine_interval < 1)) {
    throw ConfigError("double loop: refine_interval must be >= 1 and refine_steps >= 0");
  }
  const auto started = std::chrono::steady_clock::now();

  RunResult res;
  SlipState& s = res.state;
  const SgdDdResult warm = sgd_dd(problem, init.x0, init.y0_init, schedule.alpha_init, schedule.T0, seed, 0, &s.calls);
  res.warm_start_y = warm.y;
  auto pi_tilde_cursor = static_cast<std::uint64_t>(schedule.T0);

  s.x = init.x0;
  s.y = warm.y;
  s.z = init.z0;
  s.m = Vector::Zero(obj.dim_x());
  s.t = 0;
  if (options.record_trace) res.trace.reserve(static_cast<std::size_t>(schedule.T));

  const StochasticOracle& oracle = problem.oracle;
  SlipState next;
  for (std::int64_t t = 0; t < schedule.T; ++t) {
    if (options.max_wall_seconds > 0.0) {
      const std::chrono::duration<double> el = std::chrono::steady_clock::now() - started;
      if (el.count() > options.max_wall_seconds) {
        res.status = RunStatus::TimedOut;
        res.failed_at = t;
        break;
      }
    }
    const auto c = static_cast<std::uint64_t>(t);
    const Sample xi{Stream::Xi, c, seed};
    const Sample xi_p{Stream::XiPrime, c, seed};
    const Sample pi{Stream::Pi, c, seed};
    const Sample zeta{Stream::Zeta, c, seed};
    const Sample zeta_p{Stream::ZetaPrime, c, seed};

    double alpha = schedule.alpha;
    double gamma = schedule.gamma;
    double eta = schedule.eta;
    if (cfg.ttsa) {
      eta = ttsa_step(schedule.eta, cfg.ttsa_settings.eta_exponent, t + 1);
      alpha = ttsa_step(schedule.alpha, cfg.ttsa_settings.alpha_exponent, t + 1);
      gamma = ttsa_step(schedule.gamma, cfg.ttsa_settings.alpha_exponent, t + 1);
    }

    Vector estimate;
    bool skipped = false;
    try {
      next.y = s.y - alpha * oracle.grad_y_G(s.x, s.y, pi);
      next.z = update_z(oracle, s.z, s.x, s.y, gamma, zeta, xi);
      estimate = hypergrad_estimate(s.x, s.y, s.z, xi_p, zeta_p, oracle);
      next.m = cfg.momentum ? Vector(schedule.beta * s.m + (1.0 - schedule.beta) * estimate) : estimate;
      if (cfg.rule == XRule::Normalized) {
        const double n = next.m.norm();
        if (n == 0.0) {
          next.x = s.x;
          skipped = true;
        } else {
          next.x = s.x - (eta / n) * next.m;
        }
      } else {
        next.x = s.x - eta * next.m;
      }
      next.calls = s.calls;
      ++next.calls.n_grad_y_G;
      ++next.calls.n_hvp_yy;
      ++next.calls.n_grad_y_F;
      ++next.calls.n_grad_x_F;
      ++next.calls.n_hvp_xy;
      next.t = t + 1;
      if (cfg.refine_steps > 0 && (t + 1) % cfg.refine_interval == 0 && finite(next.x)) {
        next.y = sgd_dd(problem, next.x, next.y, alpha, cfg.refine_steps, seed, pi_tilde_cursor, &next.calls).y;
        pi_tilde_cursor += static_cast<std::uint64_t>(cfg.refine_steps);
      }
    } catch (const std::range_error&) {
      res.status = RunStatus::Diverged;
      res.failed_at = t;
      break;
    }

    if (!finite(next.x) || !finite(next.y) || !finite(next.z) || !finite(next.m)) {
      res.status = RunStatus::Diverged;
      res.failed_at = t;
      break;
    }
    if (skipped) ++res.skipped_steps;
    if (options.hook) options.hook(IterationEvent{t, s, next, estimate, skipped});
    if (options.record_trace) res.trace.push_back(metrics(problem, s, next.m, next.calls, options));
    std::swap(s, next);
  }
  return res;
}

}  // namespace

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Ok: return "ok";
    case RunStatus::Diverged: return "diverged";
    case RunStatus::TimedOut: return "timed_out";
  }
  return "unknown";
}

SgdDdResult sgd_dd(const BilevelProblem& problem, const UpperSequence& xs, const Vector& y0, double alpha,
                   std::int64_t N, std::uint64_t seed, std::uint64_t counter_offset, OracleCounter* calls) {
  if (N < 0) throw ConfigError("sgd_dd: N must be >= 0");
  if (!(alpha > 0.0) && N > 0) throw ConfigError("sgd_dd: alpha must be positive");
  SgdDdResult res;
  res.y = y0;
  res.step_exceeds_theory = problem.constants.l_g1 > 0.0 && alpha > 1.0 / (2.0 * problem.constants.l_g1);
  const bool track = problem.analytic.has_value();
  for (std::int64_t t = 0; t < N; ++t) {
    const Vector x = xs(t);
    if (t == 0) check_dimensions(*problem.objective, x, res.y);
    if (track) res.distances.push_back((res.y - problem.analytic->y_star(x)).norm());
    const Sample pi{Stream::PiTilde, counter_offset + static_cast<std::uint64_t>(t), seed};
    res.y -= alpha * problem.oracle.grad_y_G(x, res.y, pi);
    if (calls != nullptr) ++calls->n_grad_y_G;
  }
  if (track) res.distances.push_back((res.y - problem.analytic->y_star(xs(N))).norm());
  return res;
}

SgdDdResult sgd_dd(const BilevelProblem& problem, const Vector& x, const Vector& y0, double alpha, std::int64_t N,
                   std::uint64_t seed, std::uint64_t counter_offset, OracleCounter* calls) {
  if (N < 0) throw ConfigError("sgd_dd: N must be >= 0");
  if (!(alpha > 0.0) && N > 0) throw ConfigError("sgd_dd: alpha must be positive");
  check_dimensions(*problem.objective, x, y0);
  SgdDdResult res;
  res.y = y0;
  res.step_exceeds_theory = problem.constants.l_g1 > 0.0 && alpha > 1.0 / (2.0 * problem.constants.l_g1);
  std::optional<Vector> ystar;
  if (problem.analytic) {
    ystar = problem.analytic->y_star(x);
    res.distances.reserve(static_cast<std::size_t>(N + 1));
    res.distances.push_back((res.y - *ystar).norm());
  }
  for (std::int64_t t = 0; t < N; ++t) {
    const Sample pi{Stream::PiTilde, counter_offset + static_cast<std::uint64_t>(t), seed};
    res.y -= alpha * problem.oracle.grad_y_G(x, res.y, pi);
    if (calls != nullptr) ++calls->n_grad_y_G;
    if (ystar) res.distances.push_back((res.y - *ystar).norm());
  }
  return res;
}

Vector update_z(const StochasticOracle& oracle, const Vector& z, const Vector& x, const Vector& y, double gamma,
                const Sample& zeta, const Sample& xi) {
  return z - gamma * (oracle.hvp_yy_G(x, y, z, zeta) - oracle.grad_y_F(x, y, xi));
}

RunResult slip_run(const BilevelProblem& problem, const ParamSchedule& schedule, const InitialPoint& init,
                   std::uint64_t seed, const RunOptions& options) {
  return run_engine(problem, schedule, init, seed, options, EngineConfig{});
}

RunResult masoba_run(const BilevelProblem& problem, const ParamSchedule& schedule, const InitialPoint& init,
                     std::uint64_t seed, const RunOptions& options) {
  EngineConfig cfg;
  cfg.rule = XRule::Plain;
  return run_engine(problem, schedule, init, seed, options, cfg);
}

RunResult double_loop_run(const BilevelProblem& problem, const ParamSchedule& schedule,
                          const DoubleLoopSettings& settings, const InitialPoint& init, std::uint64_t seed,
                          const RunOptions& options) {
  EngineConfig cfg;
  cfg.refine_interval = settings.refine_interval;
  cfg.refine_steps = settings.refine_steps;
  if (settings.refine_interval < 1) throw ConfigError("double loop: refine_interval must be >= 1");
  return run_engine(problem, schedule, init, seed, options, cfg);
}

RunResult ttsa_run(const BilevelProblem& problem, const ParamSchedule& schedule, const TtsaSettings& settings,
                   const InitialPoint& init, std::uint64_t seed, const RunOptions& options) {
  if (!(settings.eta_exponent >= 0.0) || !(settings.alpha_exponent >= 0.0)) {
    throw ConfigError("ttsa: step-size exponents must be >= 0");
  }
  EngineConfig cfg;
  cfg.rule = XRule::Plain;
  cfg.momentum = false;
  cfg.ttsa = true;
  cfg.ttsa_settings = settings;
  return run_engine(problem, schedule, init, seed, options, cfg);
}

double ttsa_step(double base, double exponent, std::int64_t t) {
  if (t < 1) throw ConfigError("ttsa_step: t must be >= 1");
  return base * std::pow(static_cast<double>(t), -exponent);
}

}  // namespace slipopt
