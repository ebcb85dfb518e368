#include "slipopt/suites.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "slipopt/config.hpp"
#include "slipopt/diagnostics.hpp"
#include "slipopt/experiment.hpp"
#include "slipopt/synthetic.hpp"
#include "slipopt/trace_csv.hpp"
#include "slipopt/verify.hpp"

namespace slipopt {

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

Vector uniform_point(std::uint64_t seed, std::uint64_t k, int dim, double radius) {
  const CounterRng rng({Stream::PiTilde, k, seed}, 20);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = radius * (2.0 * rng.uniform(static_cast<std::uint64_t>(i)) - 1.0);
  return v;
}

struct NamedProblem {
  std::string name;
  BilevelProblem problem;
};

std::vector<NamedProblem> shipped_instances() {
  std::vector<NamedProblem> out;
  out.push_back({"q2", make_quadratic(q2_spec())});
  out.push_back({"quadratic(3,4)", make_quadratic(random_quadratic_spec(3, 4, 11))});
  out.push_back({"unbounded_smooth(a=1)", make_unbounded_smooth({1.0, q2_spec()})});
  out.push_back({"hyperclean(p=0.2)", make_hyperclean({}).problem});
  return out;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<SuiteCheck> suite_oracles() {
  std::vector<SuiteCheck> out;

  {
    double worst_fd = 0.0;
    double worst_inner = 0.0;
    for (int k = 0; k < 20; ++k) {
      const int dx = 1 + k % 5;
      const int dy = 1 + (3 * k + 1) % 5;
      const QuadraticSpec spec = random_quadratic_spec(dx, dy, 100 + static_cast<std::uint64_t>(k));
      const BilevelProblem p = make_quadratic(spec);
      const Eigen::LLT<Matrix> llt(spec.A);
      for (int j = 0; j < 10; ++j) {
        const Vector x = uniform_point(1000 + static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(j), dx, 2.0);
        const Vector an = p.analytic->hypergrad(x);
        const Vector fd = finite_diff_hypergrad(p, x);
        worst_fd = std::max(worst_fd, (fd - an).norm() / std::max(an.norm(), 1e-12));
        const Vector y = inner_solve_exact(p, x);
        worst_inner = std::max(worst_inner, (y - llt.solve(spec.B * x + spec.c)).cwiseAbs().maxCoeff());
      }
    }
    out.push_back({"oracles", "fd_vs_analytic_hypergrad", worst_fd <= 1e-4, "max rel err " + fmt("%.3e", worst_fd)});
    out.push_back({"oracles", "inner_solve_vs_closed_form", worst_inner <= 1e-8, "max abs err " + fmt("%.3e", worst_inner)});
  }

  for (const NamedProblem& np : shipped_instances()) {
    const BilevelProblem& p = np.problem;
    double fixed = 0.0;
    double stationarity = 0.0;
    double linear = 0.0;
    for (std::uint64_t j = 0; j < 10; ++j) {
      const Vector x = uniform_point(77, j, p.dim_x(), 1.0);
      const AnalyticPoint a = p.analytic->evaluate(x);
      const Vector est = hypergrad_estimate(x, a.y_star, a.z_star, {Stream::XiPrime, j, 1}, {Stream::ZetaPrime, j, 1},
                                            p.oracle);
      fixed = std::max(fixed, (est - a.hypergrad).cwiseAbs().maxCoeff());
      stationarity = std::max(stationarity, p.objective->grad_y_lower(x, a.y_star).cwiseAbs().maxCoeff());
      const Vector rhs = p.objective->grad_y_upper(x, a.y_star);
      const Vector lhs = p.objective->hvp_yy_lower(x, a.y_star, a.z_star);
      linear = std::max(linear, (lhs - rhs).norm() / std::max(rhs.norm(), 1e-300));
    }
    out.push_back({"oracles", "fixed_point[" + np.name + "]", fixed <= 1e-10, "max abs gap " + fmt("%.3e", fixed)});
    out.push_back({"oracles", "analytic_y_star[" + np.name + "]", stationarity <= 1e-10,
                   "max |grad_y g| " + fmt("%.3e", stationarity)});
    out.push_back({"oracles", "analytic_z_star[" + np.name + "]", linear <= 1e-8, "max rel residual " + fmt("%.3e", linear)});
    const ConvexityProbeReport cv = strong_convexity_probe(p, p.constants.mu, 1000, 5);
    out.push_back({"oracles", "strong_convexity[" + np.name + "]", cv.violations == 0,
                   std::to_string(cv.violations) + " violations, worst gap " + fmt("%.3e", cv.worst_relative_gap)});
  }

  {
    const BilevelProblem p = make_quadratic(q2_spec(), NoiseModel::gaussian(0.1, 0.1, 0.1));
    const UnbiasednessReport r = empirical_unbiasedness_check(p, Vector::Zero(2), Vector::Ones(2), 10000, 2024);
    out.push_back({"oracles", "unbiasedness[q2 gaussian 0.1]", r.pass(),
                   "max deviation " + fmt("%.3f", r.max_deviation_in_sigmas) + " sigma"});
  }
  {
    const NoiseModel nm = NoiseModel::bounded(0.1, 0.1, 0.1, 0.05);
    const BilevelProblem p = make_quadratic(q2_spec(), nm);
    const Vector x = Vector::Constant(2, 0.3);
    const Vector y = Vector::Constant(2, -0.2);
    const Vector z = Vector::Constant(2, 0.7);
    const Objective& o = *p.objective;
    double worst = 0.0;
    for (std::uint64_t c = 0; c < 1000; ++c) {
      worst = std::max(worst, (p.oracle.grad_x_F(x, y, {Stream::XiPrime, c, 3}) - o.grad_x_upper(x, y)).norm() / nm.sigma_f1);
      worst = std::max(worst, (p.oracle.grad_y_F(x, y, {Stream::Xi, c, 3}) - o.grad_y_upper(x, y)).norm() / nm.sigma_f1);
      worst = std::max(worst, (p.oracle.hvp_xy_G(x, y, z, {Stream::ZetaPrime, c, 3}) - o.cross_hvp_lower(x, y, z)).norm() /
                                  (nm.sigma_g2 * z.norm()));
      worst = std::max(worst, (p.oracle.hvp_yy_G(x, y, z, {Stream::Zeta, c, 3}) - o.hvp_yy_lower(x, y, z)).norm() / nm.sigma_z);
    }
    out.push_back({"oracles", "bounded_noise_almost_sure", worst <= 1.0 + 1e-12,
                   "max |noise| / bound " + fmt("%.6f", worst)});
  }
  return out;
}

std::vector<SuiteCheck> suite_warmstart() {
  std::vector<SuiteCheck> out;
  const InitialPoint start = q2_benchmark_start();
  for (const bool noisy : {true, false}) {
    const BilevelProblem p = make_quadratic(q2_spec(), noisy ? q2_ensemble_noise() : NoiseModel::noiseless());
    const double dist0 = (start.y0_init - p.analytic->y_star(start.x0)).norm();
    // The theorem step needs sigma_g1 > 0; the noiseless variant reuses the noisy plan.
    SmoothnessConstants c = p.constants;
    c.sigma_g1 = q2_ensemble_noise().sigma_g1;
    const WarmStartPlan plan = theorem_warm_start(c, 0.05, dist0);
    const WarmStartReport r = check_warm_start(p, plan.alpha_init, plan.T0, p.constants.L1, 200, 0.05, start.x0,
                                               start.y0_init);
    const bool pass = noisy ? r.pass : r.violations == 0;
    out.push_back({"warmstart", noisy ? "gaussian_200_seeds" : "noiseless_200_seeds", pass,
                   "T0 " + std::to_string(plan.T0) + ", alpha_init " + fmt("%.6g", plan.alpha_init) + ", violations " +
                       std::to_string(r.violations) + "/200, rate " + fmt("%.3f", r.violation_rate) + " <= " +
                       fmt("%.3f", r.allowance) + ", worst distance " + fmt("%.4g", r.worst_distance) +
                       " vs threshold " + fmt("%.4g", r.threshold)});
  }
  return out;
}

std::vector<SuiteCheck> suite_tracking() {
  std::vector<SuiteCheck> out;
  const double delta = 0.05;
  const std::vector<Trace> traces = q2_tracking_ensemble(200, delta);
  const BilevelProblem p = make_quadratic(q2_spec(), q2_ensemble_noise());
  const TrackingBoundReport r = bound_check_tracking(traces, q2_benchmark_schedule(), p.constants, delta);
  out.push_back({"tracking", "all_t_bound_200_seeds", r.available && r.pass,
                 "violating seeds " + std::to_string(r.violating_seeds) + "/200, rate " + fmt("%.3f", r.violation_rate) +
                     " <= " + fmt("%.3f", r.allowance) + ", worst lhs/rhs " + fmt("%.4f", r.worst_ratio) +
                     " (statistical)"});
  return out;
}

std::vector<SuiteCheck> suite_bias() {
  std::vector<SuiteCheck> out;
  const NamedProblem cases[] = {{"q2", make_quadratic(q2_spec())},
                                {"unbounded_smooth(a=1)", make_unbounded_smooth({1.0, q2_spec()})}};
  for (const NamedProblem& np : cases) {
    const auto rows = collect_bias_observations(np.problem, q2_benchmark_schedule(), q2_benchmark_start(), 1);
    const BiasReport r = check_bias_decomposition(np.problem, rows);
    out.push_back({"bias", "pointwise_bound[" + np.name + "]", r.pass,
                   std::to_string(r.rows) + " rows, max lhs/rhs " + fmt("%.4f", r.max_ratio)});
  }
  return out;
}

std::vector<SuiteCheck> suite_counts() {
  std::vector<SuiteCheck> out;
  const BilevelProblem p = make_quadratic(q2_spec(), q2_ensemble_noise());
  const ParamSchedule s = q2_benchmark_schedule();
  RunOptions quiet;
  quiet.record_trace = false;
  const auto T = static_cast<std::uint64_t>(s.T);
  const auto T0 = static_cast<std::uint64_t>(s.T0);
  {
    const OracleCounter got = slip_run(p, s, q2_benchmark_start(), 3, quiet).state.calls;
    const OracleCounter want{T, T, T0 + T, T, T};
    out.push_back({"counts", "slip_counter", got == want,
                   "gyG " + std::to_string(got.n_grad_y_G) + ", total " + std::to_string(got.total())});
  }
  {
    const OracleCounter got = double_loop_run(p, s, {2, 3}, q2_benchmark_start(), 3, quiet).state.calls;
    const OracleCounter want{T, T, T0 + T + 3 * (T / 2), T, T};
    out.push_back({"counts", "doubleloop_counter", got == want, "gyG " + std::to_string(got.n_grad_y_G)});
  }
  {
    ParamSchedule longer = s;
    longer.T = 10000;
    double worst = 0.0;
    std::int64_t steps = 0;
    RunOptions opts = quiet;
    opts.hook = [&](const IterationEvent& ev) {
      if (ev.step_skipped) return;
      ++steps;
      worst = std::max(worst, std::abs((ev.after.x - ev.before.x).norm() - longer.eta) / longer.eta);
    };
    slip_run(p, longer, q2_benchmark_start(), 4, opts);
    out.push_back({"counts", "step_normalization_10k", worst <= 1e-12,
                   std::to_string(steps) + " steps, max rel deviation " + fmt("%.3e", worst)});
  }
  return out;
}

std::vector<SuiteCheck> suite_determinism() {
  std::vector<SuiteCheck> out;
  {
    const BilevelProblem p = make_quadratic(q2_spec(), q2_ensemble_noise());
    const Trace a = slip_run(p, q2_benchmark_schedule(), q2_benchmark_start(), 9).trace;
    const Trace b = slip_run(p, q2_benchmark_schedule(), q2_benchmark_start(), 9).trace;
    out.push_back({"determinism", "repeat_run_identical", format_trace(a) == format_trace(b), std::to_string(a.size()) + " rows"});
  }
  {
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / ("slipopt_det_" + std::to_string(stamp));
    std::filesystem::create_directories(dir);
    RunConfig cfg = parse_config(
        "[problem]\nkind = q2\nnoise = gaussian\nsigma_f1 = 0.1\nsigma_g1 = 0.1\nsigma_g2 = 0.1\n"
        "[schedule]\nmode = practical\nalpha = 0.1\nbeta = 0.9\ngamma = 0.1\neta = 0.01\nT = 500\nT0 = 50\n"
        "[run]\nseeds = 1,2,3,4\ny0 = 1\n");
    cfg.run.out = (dir / "serial").string();
    const ExperimentOutcome serial = run_experiment(cfg, 1);
    cfg.run.out = (dir / "pooled").string();
    const ExperimentOutcome pooled = run_experiment(cfg, 3);
    bool same = serial.seeds.size() == pooled.seeds.size();
    for (std::size_t i = 0; same && i < serial.seeds.size(); ++i) {
      same = read_file(serial.seeds[i].trace_path) == read_file(pooled.seeds[i].trace_path);
    }
    std::filesystem::remove_all(dir);
    out.push_back({"determinism", "worker_pool_byte_identical", same, "4 seeds, 1 vs 3 workers"});
  }
  return out;
}

}  // namespace

ParamSchedule q2_benchmark_schedule() {
  return schedule_practical({{"alpha", 0.1}, {"beta", 0.9}, {"gamma", 0.1}, {"eta", 0.01}, {"T", 2000}, {"T0", 50}});
}

InitialPoint q2_benchmark_start() { return {Vector::Zero(2), Vector::Ones(2), Vector::Zero(2)}; }

NoiseModel q2_ensemble_noise() { return NoiseModel::gaussian(0.1, 0.1, 0.1); }

WarmStartPlan theorem_warm_start(const SmoothnessConstants& c, double delta, double dist0) {
  WarmStartPlan plan;
  plan.alpha_init = theorem_alpha_init(c, delta);
  plan.T0 = warm_start_T0(plan.alpha_init, c.mu, c.L1, dist0);
  return plan;
}

std::vector<Trace> q2_tracking_ensemble(std::int64_t n_seeds, double delta, std::uint64_t base_seed) {
  const BilevelProblem p = make_quadratic(q2_spec(), q2_ensemble_noise());
  const InitialPoint start = q2_benchmark_start();
  const WarmStartPlan plan = theorem_warm_start(p.constants, delta, (start.y0_init - p.analytic->y_star(start.x0)).norm());
  ParamSchedule s = q2_benchmark_schedule();
  s.alpha_init = plan.alpha_init;
  s.T0 = plan.T0;
  std::vector<Trace> traces;
  traces.reserve(static_cast<std::size_t>(n_seeds));
  for (std::int64_t i = 0; i < n_seeds; ++i) {
    traces.push_back(slip_run(p, s, start, mix64(base_seed + static_cast<std::uint64_t>(i))).trace);
  }
  return traces;
}

std::vector<std::string> suite_names() { return {"oracles", "warmstart", "tracking", "bias", "counts", "determinism", "all"}; }

std::vector<SuiteCheck> run_suite(const std::string& name) {
  if (name == "oracles") return suite_oracles();
  if (name == "warmstart") return suite_warmstart();
  if (name == "tracking") return suite_tracking();
  if (name == "bias") return suite_bias();
  if (name == "counts") return suite_counts();
  if (name == "determinism") return suite_determinism();
  if (name == "all") {
    std::vector<SuiteCheck> all;
    for (const auto& n : suite_names()) {
      if (n == "all") continue;
      auto part = run_suite(n);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  std::string known;
  for (const auto& n : suite_names()) known += (known.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown suite '" + name + "'; available: " + known);
}

}  // namespace slipopt
