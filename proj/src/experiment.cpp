#include "slipopt/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "slipopt/diagnostics.hpp"
#include "slipopt/synthetic.hpp"
#include "slipopt/trace_csv.hpp"
#include "slipopt/verify.hpp"

namespace slipopt {

namespace {

using nlohmann::json;

Vector expand(const std::optional<std::vector<double>>& v, int dim, double fallback, const char* name) {
  if (!v) return Vector::Constant(dim, fallback);
  if (v->size() == 1) return Vector::Constant(dim, v->front());
  if (static_cast<int>(v->size()) != dim) {
    throw ConfigError(std::string("config: [run] ") + name + " has " + std::to_string(v->size()) +
                      " entries, expected 1 or " + std::to_string(dim));
  }
  return Eigen::Map<const Vector>(v->data(), dim);
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json schedule_json(const ParamSchedule& s) {
  json j = {{"mode", to_string(s.mode)}, {"alpha_init", s.alpha_init}, {"T0", s.T0}, {"alpha", s.alpha},
            {"beta", s.beta},           {"gamma", s.gamma},           {"eta", s.eta}, {"T", s.T}};
  if (s.mode != ScheduleMode::Practical) {
    json terms = json::array();
    for (const CeilingTerm& t : s.ceiling_terms) terms.push_back({{"name", t.name}, {"value", t.value}});
    j["diagnostics"] = {{"eps", s.eps},
                        {"delta", s.delta},
                        {"A", s.A},
                        {"B", s.B},
                        {"Delta0", s.Delta0},
                        {"Delta_y0", s.Delta_y0},
                        {"Delta_z0", s.Delta_z0},
                        {"T_real", s.T_real},
                        {"eps_ceiling", s.eps_ceiling},
                        {"binding_term", s.binding_term},
                        {"accuracy_factor", s.accuracy_factor},
                        {"ceiling_terms", terms}};
  }
  return j;
}

json constants_json(const SmoothnessConstants& c) {
  return {{"mu", c.mu},         {"l_g1", c.l_g1},         {"l_g2", c.l_g2},         {"l_f0", c.l_f0},
          {"L_x0", c.L_x0},     {"L_x1", c.L_x1},         {"L_y0", c.L_y0},         {"L_y1", c.L_y1},
          {"sigma_f1", c.sigma_f1}, {"sigma_g1", c.sigma_g1}, {"sigma_g2", c.sigma_g2}, {"sigma_z", c.sigma_z},
          {"L0", c.L0},         {"L1", c.L1},             {"l_zstar", c.l_zstar}};
}

std::string seed_file(const std::string& prefix, std::uint64_t seed) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "_seed%" PRIu64 ".csv", seed);
  return prefix + buf;
}

}  // namespace

BuiltProblem build_problem(const ProblemConfig& cfg) {
  BuiltProblem out;
  if (cfg.kind == "q2") {
    QuadraticSpec spec = q2_spec();
    spec.box_radius = cfg.box_radius;
    out.problem = make_quadratic(spec, cfg.noise);
    out.problem.name = "q2";
  } else if (cfg.kind == "quadratic") {
    QuadraticSpec spec = random_quadratic_spec(cfg.dim_x, cfg.dim_y, cfg.instance_seed);
    spec.box_radius = cfg.box_radius;
    out.problem = make_quadratic(spec, cfg.noise);
  } else if (cfg.kind == "unbounded_smooth") {
    UnboundedSmoothSpec spec;
    spec.a = cfg.a;
    spec.core = cfg.core == "q2" ? q2_spec() : random_quadratic_spec(cfg.dim_x, cfg.dim_y, cfg.instance_seed);
    spec.core.box_radius = cfg.box_radius;
    out.problem = make_unbounded_smooth(spec, cfg.noise);
  } else if (cfg.kind == "hyperclean") {
    HypercleanSpec spec;
    spec.n_train = cfg.n_train;
    spec.n_val = cfg.n_val;
    spec.feature_dim = cfg.feature_dim;
    spec.corruption = cfg.corruption;
    spec.lambda = cfg.lambda;
    spec.seed = cfg.data_seed;
    HypercleanInstance inst = make_hyperclean(spec, cfg.noise);
    out.problem = std::move(inst.problem);
    out.corrupted = inst.data->corrupted;
    out.hyperclean = true;
  } else {
    throw ConfigError("unknown problem kind '" + cfg.kind + "'");
  }
  return out;
}

InitialPoint build_initial_point(const RunSettings& run, const BilevelProblem& problem, bool hyperclean) {
  InitialPoint init;
  init.x0 = expand(run.x0, problem.dim_x(), hyperclean ? 1.0 : 0.0, "x0");
  init.y0_init = expand(run.y0, problem.dim_y(), 0.0, "y0");
  init.z0 = expand(run.z0, problem.dim_y(), 0.0, "z0");
  return init;
}

ParamSchedule build_schedule(const RunConfig& cfg, const BilevelProblem& problem, const InitialPoint& init,
                             std::optional<double> eps_override) {
  const ScheduleConfig& sc = cfg.schedule;
  ParamSchedule s;
  if (sc.mode == ScheduleMode::Practical) {
    s = schedule_practical(sc.practical);
  } else {
    if (!sc.Delta0) throw ConfigError("config: [schedule] Delta0 (Phi(x0) - inf Phi) is required in theorem modes");
    ScheduleInputs in;
    in.eps = eps_override.value_or(sc.eps);
    in.delta = sc.delta;
    in.Delta0 = *sc.Delta0;
    Vector y_star, z_star, grad;
    if (problem.analytic) {
      const AnalyticPoint a = problem.analytic->evaluate(init.x0);
      y_star = a.y_star;
      z_star = a.z_star;
      grad = a.hypergrad;
    } else {
      y_star = inner_solve_exact(problem, init.x0);
      z_star = solve_linear_system_exact(problem, init.x0, y_star);
      grad = finite_diff_hypergrad(problem, init.x0);
    }
    in.Delta_y0 = sc.Delta_y0.value_or((init.y0_init - y_star).norm());
    in.Delta_z0 = sc.Delta_z0.value_or((init.z0 - z_star).norm());
    in.grad_phi0_norm = grad.norm();
    s = sc.mode == ScheduleMode::Theorem41 ? schedule_theorem41(problem.constants, in)
                                           : schedule_theorem42(problem.constants, in);
  }
  if (cfg.run.max_iters > 0 && s.T > cfg.run.max_iters) {
    s.T = cfg.run.max_iters;
    s.T_saturated = false;
  }
  return s;
}

RunResult execute_algorithm(const AlgorithmConfig& algo, const BilevelProblem& problem, const ParamSchedule& schedule,
                            const InitialPoint& init, std::uint64_t seed, const RunOptions& options) {
  if (algo.name == "slip") return slip_run(problem, schedule, init, seed, options);
  if (algo.name == "masoba") return masoba_run(problem, schedule, init, seed, options);
  if (algo.name == "doubleloop") {
    return double_loop_run(problem, schedule, {algo.refine_interval, algo.refine_steps}, init, seed, options);
  }
  if (algo.name == "ttsa") return ttsa_run(problem, schedule, {algo.eta_exponent, algo.alpha_exponent}, init, seed, options);
  throw ConfigError("unknown algorithm '" + algo.name + "'");
}

double closed_form_calls(const AlgorithmConfig& algo, std::int64_t T0, double T) {
  double calls = static_cast<double>(T0) + 5.0 * T;
  if (algo.name == "doubleloop") {
    calls += static_cast<double>(algo.refine_steps) * std::floor(T / static_cast<double>(algo.refine_interval));
  }
  return calls;
}

ExperimentOutcome run_experiment(const RunConfig& cfg, int workers) {
  const auto started = std::chrono::steady_clock::now();
  const BuiltProblem built = build_problem(cfg.problem);
  const BilevelProblem& problem = built.problem;
  const InitialPoint init = build_initial_point(cfg.run, problem, built.hyperclean);

  ExperimentOutcome outcome;
  outcome.schedule = build_schedule(cfg, problem, init);
  if (outcome.schedule.T_saturated) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", outcome.schedule.T_real);
    throw ConfigError(std::string("run: theorem-mode iteration count ") + buf +
                      " is not runnable; set [run] max_iters to truncate it");
  }
  const std::size_t n = cfg.run.seeds.size();
  outcome.seeds.resize(n);

  const std::filesystem::path prefix_dir = std::filesystem::path(cfg.run.out).parent_path();
  if (!prefix_dir.empty()) std::filesystem::create_directories(prefix_dir);

  RunOptions options;
  options.fd_every = cfg.run.fd_every;
  options.max_wall_seconds = cfg.run.max_wall_seconds;

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const auto t0 = std::chrono::steady_clock::now();
        SeedOutcome& so = outcome.seeds[i];
        so.seed = cfg.run.seeds[i];
        const RunResult r = execute_algorithm(cfg.algorithm, problem, outcome.schedule, init, so.seed, options);
        so.trace_path = seed_file(cfg.run.out, so.seed);
        write_trace(so.trace_path, r.trace);
        so.status = r.status;
        so.failed_at = r.failed_at;
        so.skipped_steps = r.skipped_steps;
        so.rows = r.trace.size();
        so.final_x = r.state.x;
        so.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int pool = std::max(1, std::min<int>(workers > 0 ? workers : cfg.run.workers, static_cast<int>(n)));
  if (pool == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int k = 0; k < pool; ++k) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);

  json runs = json::array();
  for (const SeedOutcome& so : outcome.seeds) {
    if (so.status == RunStatus::Diverged) outcome.any_failed = true;
    json j = {{"seed", so.seed},
              {"trace", so.trace_path.filename().string()},
              {"status", so.status == RunStatus::Diverged ? "FAILED" : to_string(so.status)},
              {"failed_at", so.failed_at ? json(*so.failed_at) : json(nullptr)},
              {"skipped_steps", so.skipped_steps},
              {"rows", so.rows},
              {"wall_seconds", so.wall_seconds}};
    const Trace tail = read_trace(so.trace_path);
    if (!tail.empty()) {
      const TraceRecord& last = tail.back();
      j["final"] = {{"t", last.t},
                    {"grad_norm", optional_json(last.grad_norm)},
                    {"y_err", optional_json(last.y_err)},
                    {"z_err", optional_json(last.z_err)},
                    {"eps_err", optional_json(last.eps_err)},
                    {"phi", optional_json(last.phi)}};
    }
    if (built.hyperclean) {
      const WeightReport w = hyperclean_weight_report(so.final_x, built.corrupted);
      j["hyperclean"] = {{"mean_sigma_clean", w.mean_sigma_clean},
                         {"mean_sigma_corrupted", optional_json(w.mean_sigma_corrupted)}};
    }
    runs.push_back(j);
  }

  json meta = {{"problem", {{"kind", cfg.problem.kind}, {"name", problem.name}, {"noise", to_string(cfg.problem.noise.kind)},
                            {"dim_x", problem.dim_x()}, {"dim_y", problem.dim_y()}}},
               {"algorithm", cfg.algorithm.name},
               {"schedule", schedule_json(outcome.schedule)},
               {"constants", constants_json(problem.constants)},
               {"status", outcome.any_failed ? "FAILED" : "OK"},
               {"workers", pool},
               {"runs", runs},
               {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()}};
  outcome.metadata_path = cfg.run.out + "_meta.json";
  std::ofstream f(outcome.metadata_path);
  if (!f) throw std::runtime_error("cannot write '" + outcome.metadata_path.string() + "'");
  f << meta.dump(2) << '\n';
  return outcome;
}

SweepSummary sweep_eps(const RunConfig& cfg, const std::vector<double>& eps_list) {
  SweepSummary summary;
  if (eps_list.empty()) return summary;
  if (cfg.schedule.mode == ScheduleMode::Practical) {
    throw ConfigError("sweep: [schedule] mode must be theorem41 or theorem42");
  }
  const BuiltProblem built = build_problem(cfg.problem);
  const InitialPoint init = build_initial_point(cfg.run, built.problem, built.hyperclean);
  RunConfig untruncated = cfg;
  untruncated.run.max_iters = 0;

  std::vector<double> inv_eps, iters;
  for (double eps : eps_list) {
    SweepRow row;
    row.eps = eps;
    try {
      const ParamSchedule s = build_schedule(untruncated, built.problem, init, eps);
      row.T = std::ceil(s.T_real);
      row.T0 = s.T0;
      row.eps_ceiling = s.eps_ceiling;
      row.binding_term = s.binding_term;
      row.total_calls = closed_form_calls(cfg.algorithm, s.T0, row.T);
      inv_eps.push_back(1.0 / eps);
      iters.push_back(row.T);
      if (cfg.run.max_iters > 0 && !s.T_saturated && s.T <= cfg.run.max_iters) {
        RunOptions opts;
        opts.fd_every = cfg.run.fd_every;
        const RunResult r = execute_algorithm(cfg.algorithm, built.problem, s, init, cfg.run.seeds.front(), opts);
        double sum = 0.0;
        std::size_t count = 0;
        for (const TraceRecord& tr : r.trace) {
          if (tr.grad_norm) {
            sum += *tr.grad_norm;
            ++count;
          }
        }
        if (count > 0) row.avg_grad_norm = sum / static_cast<double>(count);
      }
    } catch (const SchedulingError& e) {
      row.skipped = true;
      row.eps_ceiling = e.ceiling();
      row.binding_term = e.binding_term().empty() ? e.what() : e.binding_term();
    }
    summary.rows.push_back(row);
  }
  if (inv_eps.size() >= 2) summary.slope = loglog_slope(inv_eps, iters);
  return summary;
}

std::string format_sweep_csv(const SweepSummary& summary) {
  std::string out = "eps,status,T,T0,total_calls,avg_grad_norm,eps_ceiling,binding_term\n";
  char buf[64];
  for (const SweepRow& r : summary.rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.eps);
    out += buf;
    out += r.skipped ? ",SKIPPED," : ",OK,";
    if (!r.skipped) {
      std::snprintf(buf, sizeof buf, "%.17g,%" PRId64 ",%.17g,", r.T, r.T0, r.total_calls);
      out += buf;
    } else {
      out += ",,,";
    }
    if (r.avg_grad_norm) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.avg_grad_norm);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g,", r.eps_ceiling);
    out += buf;
    for (char ch : r.binding_term) out += ch == ',' ? ';' : ch;
    out += '\n';
  }
  if (summary.slope) {
    std::snprintf(buf, sizeof buf, "# slope_logT_vs_log_inv_eps,%.6f\n", *summary.slope);
    out += buf;
  }
  return out;
}

}  // namespace slipopt
