// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//
//   slipopt_acceptance [--fixtures DIR] [--write-fixtures]
//
// --write-fixtures regenerates the golden files (Q2 benchmark trace and
// hyperclean weight margins) instead of comparing against them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "slipopt/algorithms.hpp"
#include "slipopt/config.hpp"
#include "slipopt/constants.hpp"
#include "slipopt/diagnostics.hpp"
#include "slipopt/experiment.hpp"
#include "slipopt/suites.hpp"
#include "slipopt/synthetic.hpp"
#include "slipopt/trace_csv.hpp"
#include "slipopt/verify.hpp"

#ifndef SLIPOPT_FIXTURE_DIR
#define SLIPOPT_FIXTURE_DIR "tests/fixtures"
#endif

namespace fs = std::filesystem;
using namespace slipopt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string exact(double v) { return fmt("%.17g", v); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) return {};
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  f << text;
}

Vector draw_point(std::uint64_t seed, std::uint64_t k, int dim, double radius) {
  const CounterRng rng({Stream::PiTilde, k, seed}, 31);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = radius * (2.0 * rng.uniform(static_cast<std::uint64_t>(i)) - 1.0);
  return v;
}

Outcome hypergradient_correctness() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int dx = 1 + (k * 7) % 5;
    const int dy = 1 + (k * 3 + 2) % 5;
    const BilevelProblem p = make_quadratic(random_quadratic_spec(dx, dy, 500 + static_cast<std::uint64_t>(k)));
    for (int j = 0; j < 10; ++j) {
      const Vector x = draw_point(77 + static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(j), dx, 2.0);
      const Vector an = p.analytic->hypergrad(x);
      const Vector fd = finite_diff_hypergrad(p, x);
      worst = std::max(worst, (fd - an).norm() / std::max(an.norm(), 1e-12));
    }
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-4 && secs < 5.0,
          "200 points, max relative error " + fmt("%.3e", worst) + ", " + fmt("%.3f", secs) + " s"};
}

Outcome fixed_point_consistency() {
  struct Named {
    std::string name;
    BilevelProblem problem;
  };
  const Named cases[] = {{"q2", make_quadratic(q2_spec())},
                         {"quadratic(3,4)", make_quadratic(random_quadratic_spec(3, 4, 11))},
                         {"unbounded_smooth", make_unbounded_smooth({1.0, q2_spec()})},
                         {"hyperclean", make_hyperclean({}).problem}};
  double worst = 0.0;
  std::string worst_name;
  for (const Named& c : cases) {
    for (int j = 0; j < 10; ++j) {
      const double radius = c.name == "hyperclean" ? 3.0 : 2.0;
      const Vector x = draw_point(4242, static_cast<std::uint64_t>(j), c.problem.dim_x(), radius);
      const AnalyticPoint a = c.problem.analytic->evaluate(x);
      const Sample s1{Stream::XiPrime, static_cast<std::uint64_t>(j), 1};
      const Sample s2{Stream::ZetaPrime, static_cast<std::uint64_t>(j), 1};
      const Vector g = hypergrad_estimate(x, a.y_star, a.z_star, s1, s2, c.problem.oracle);
      const double err = (g - a.hypergrad).cwiseAbs().maxCoeff();
      if (err >= worst) {
        worst = err;
        worst_name = c.name;
      }
    }
  }
  return {worst <= 1e-10, "4 instances x 10 points, max abs gap " + fmt("%.3e", worst) + " (" + worst_name + ")"};
}

Outcome step_normalization() {
  const BilevelProblem p = make_quadratic(q2_spec(), q2_ensemble_noise());
  ParamSchedule s = q2_benchmark_schedule();
  s.T = 10000;
  double worst = 0.0;
  std::int64_t steps = 0;
  RunOptions opts;
  opts.record_trace = false;
  opts.hook = [&](const IterationEvent& ev) {
    if (ev.step_skipped) return;
    ++steps;
    worst = std::max(worst, std::abs((ev.after.x - ev.before.x).norm() - s.eta));
  };
  const RunResult r = slip_run(p, s, q2_benchmark_start(), 17, opts);
  return {worst <= 1e-12 * s.eta && r.status == RunStatus::Ok,
          std::to_string(steps) + " steps (" + std::to_string(r.skipped_steps) + " skipped), max |step - eta| / eta " +
              fmt("%.3e", worst / s.eta)};
}

Outcome oracle_accounting() {
  const BilevelProblem p = make_quadratic(q2_spec(), q2_ensemble_noise());
  RunOptions quiet;
  quiet.record_trace = false;
  bool pass = true;
  std::string detail;
  for (const auto& [T0, T] : {std::pair<std::int64_t, std::int64_t>{50, 2000}, {7, 333}}) {
    ParamSchedule s = q2_benchmark_schedule();
    s.T0 = T0;
    s.T = T;
    const auto uT = static_cast<std::uint64_t>(T);
    const auto uT0 = static_cast<std::uint64_t>(T0);
    const OracleCounter slip = slip_run(p, s, q2_benchmark_start(), 5, quiet).state.calls;
    const OracleCounter dl = double_loop_run(p, s, {2, 3}, q2_benchmark_start(), 5, quiet).state.calls;
    const bool ok_slip = slip == OracleCounter{uT, uT, uT0 + uT, uT, uT};
    const bool ok_dl = dl == OracleCounter{uT, uT, uT0 + uT + 3 * (uT / 2), uT, uT};
    pass = pass && ok_slip && ok_dl;
    detail += (detail.empty() ? "" : "; ") + std::string("(T0,T)=(") + std::to_string(T0) + "," + std::to_string(T) +
              ") slip gyG " + std::to_string(slip.n_grad_y_G) + ", doubleloop gyG " + std::to_string(dl.n_grad_y_G);
  }
  return {pass, detail};
}

Outcome warm_start_bound() {
  const auto start = std::chrono::steady_clock::now();
  const BilevelProblem p = make_quadratic(q2_spec(), q2_ensemble_noise());
  const InitialPoint init = q2_benchmark_start();
  const double dist0 = (init.y0_init - p.analytic->y_star(init.x0)).norm();
  const WarmStartPlan plan = theorem_warm_start(p.constants, 0.05, dist0);
  const WarmStartReport r =
      check_warm_start(p, plan.alpha_init, plan.T0, p.constants.L1, 200, 0.05, init.x0, init.y0_init);
  const double secs = seconds_since(start);
  return {r.pass && secs < 30.0, "alpha_init " + fmt("%.6g", plan.alpha_init) + ", T0 " + std::to_string(plan.T0) +
                                      ", violations " + std::to_string(r.violations) + "/200 (rate " +
                                      fmt("%.3f", r.violation_rate) + " <= " + fmt("%.4f", r.allowance) + "), " +
                                      fmt("%.3f", secs) + " s"};
}

Outcome tracking_bound() {
  const double delta = 0.05;
  const std::vector<Trace> traces = q2_tracking_ensemble(200, delta);
  const BilevelProblem p = make_quadratic(q2_spec(), q2_ensemble_noise());
  const TrackingBoundReport r = bound_check_tracking(traces, q2_benchmark_schedule(), p.constants, delta);
  return {r.available && r.pass, "violating seeds " + std::to_string(r.violating_seeds) + "/200 (rate " +
                                     fmt("%.3f", r.violation_rate) + " <= " + fmt("%.4f", r.allowance) +
                                     "), worst lhs/rhs " + fmt("%.4f", r.worst_ratio) + ", statistical"};
}

Outcome benchmark_convergence(const fs::path& fixtures, bool write) {
  const auto start = std::chrono::steady_clock::now();
  const BilevelProblem p = make_quadratic(q2_spec());
  const RunResult r = slip_run(p, q2_benchmark_schedule(), q2_benchmark_start(), 1);
  const double secs = seconds_since(start);
  const double final_grad = p.analytic->hypergrad(r.state.x).norm();
  const double last_row = r.trace.back().grad_norm.value_or(std::numeric_limits<double>::infinity());
  const double to_min = (r.state.x - Vector::Constant(2, 0.4)).norm();
  const std::string text = format_trace(r.trace);
  const fs::path golden = fixtures / "q2_slip_benchmark.csv";
  if (write) write_file(golden, text);
  const std::string want = read_file(golden);
  const bool matches = !want.empty() && want == text;
  return {final_grad <= 0.02 && last_row <= 0.02 && to_min <= 0.05 && secs < 2.0 && matches,
          "|grad Phi(x_T)| " + fmt("%.5f", final_grad) + ", last row " + fmt("%.5f", last_row) + ", |x_T - x*| " +
              fmt("%.5f", to_min) + ", " + fmt("%.3f", secs) + " s, fixture " +
              (want.empty() ? "missing" : matches ? "byte-identical" : "DIFFERS")};
}

ParamSchedule hyperclean_schedule() {
  return schedule_practical({{"alpha", 0.5}, {"beta", 0.9}, {"gamma", 0.5}, {"eta", 0.05}, {"T", 1000}, {"T0", 20}});
}

Outcome hyperclean_effect(const fs::path& fixtures, bool write) {
  const auto start = std::chrono::steady_clock::now();
  nlohmann::json got = nlohmann::json::object();
  bool ordered = true;
  std::string detail;
  for (const double p : {0.2, 0.4}) {
    HypercleanSpec spec;
    spec.corruption = p;
    const HypercleanInstance inst = make_hyperclean(spec);
    const InitialPoint init{inst.initial_weights(), Vector::Zero(inst.problem.dim_y()),
                            Vector::Zero(inst.problem.dim_y())};
    RunOptions quiet;
    quiet.record_trace = false;
    const RunResult r = slip_run(inst.problem, hyperclean_schedule(), init, 1, quiet);
    const WeightReport w = hyperclean_weight_report(r.state.x, inst.data->corrupted);
    const double corrupted = w.mean_sigma_corrupted.value_or(std::numeric_limits<double>::quiet_NaN());
    const double margin = w.mean_sigma_clean - corrupted;
    ordered = ordered && r.status == RunStatus::Ok && corrupted < w.mean_sigma_clean;
    got[fmt("p=%.1f", p)] = {{"mean_sigma_clean", exact(w.mean_sigma_clean)},
                             {"mean_sigma_corrupted", exact(corrupted)},
                             {"margin", exact(margin)}};
    detail += fmt("p=%.1f: ", p) + "clean " + fmt("%.4f", w.mean_sigma_clean) + ", corrupted " +
              fmt("%.4f", corrupted) + ", margin " + fmt("%.4f", margin) + "; ";
  }
  const double secs = seconds_since(start);
  const fs::path golden = fixtures / "hyperclean_margins.json";
  if (write) write_file(golden, got.dump(2) + "\n");
  const std::string want = read_file(golden);
  const bool matches = !want.empty() && nlohmann::json::parse(want) == got;
  return {ordered && matches && secs < 60.0, detail + fmt("%.3f", secs) + " s, fixture " +
                                                 (want.empty() ? "missing" : matches ? "matches" : "DIFFERS")};
}

SmoothnessConstants random_constants(const CounterRng& rng) {
  auto u = [&](std::uint64_t i, double lo, double hi) { return lo + (hi - lo) * rng.uniform(i); };
  SmoothnessConstants c;
  c.mu = u(0, 0.2, 2.0);
  c.l_g1 = c.mu * u(1, 1.0, 5.0);
  c.l_g2 = u(2, 0.0, 1.0);
  c.l_f0 = u(3, 0.1, 2.0);
  c.L_x0 = u(4, 0.1, 3.0);
  c.L_x1 = u(5, 0.1, 2.0);
  c.L_y0 = u(6, 0.1, 3.0);
  c.L_y1 = u(7, 0.0, 2.0);
  c.sigma_f1 = u(8, 0.01, 1.0);
  c.sigma_g1 = u(9, 0.05, 1.0);
  c.sigma_g2 = u(10, 0.01, 1.0);
  c.sigma_z = u(11, 0.01, 1.0);
  return derive_constants(c);
}

Outcome schedule_identities() {
  const double tol = 8.0 * std::numeric_limits<double>::epsilon();
  double worst = 0.0;
  int accepted = 0;
  int rejected = 0;
  for (std::uint64_t k = 0; accepted < 100 && k < 10000; ++k) {
    const CounterRng rng({Stream::Xi, k, 909}, 3);
    const SmoothnessConstants c = random_constants(rng);
    ScheduleInputs in;
    in.delta = 0.01 + 0.49 * rng.uniform(20);
    in.Delta0 = 0.1 + 10.0 * rng.uniform(21);
    in.Delta_y0 = 0.05 + 2.0 * rng.uniform(22);
    in.Delta_z0 = 0.05 + 2.0 * rng.uniform(23);
    const double fraction = 0.05 + 0.9 * rng.uniform(24);
    try {
      double ceiling = std::numeric_limits<double>::infinity();
      for (const auto& t : ceiling_terms_theorem42(c, in)) ceiling = std::min(ceiling, t.value);
      in.eps = fraction * ceiling;
      const ParamSchedule s41 = schedule_theorem41(c, in);
      const ParamSchedule s42 = schedule_theorem42(c, in);
      auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
      for (const ParamSchedule* s : {&s41, &s42}) {
        const double omb = 1.0 - s->beta;
        const double gamma_factor = s == &s41 ? 1.0 : 16.0;
        worst = std::max(worst, rel(s->gamma * c.mu, gamma_factor * omb));
        worst = std::max(worst, rel(s->alpha, 8.0 * omb / c.mu));
        worst = std::max(worst, rel(s->eta * 8.0 * c.l_g1 * c.L0 * std::log(s->A), c.mu * s->eps * omb));
      }
      ++accepted;
    } catch (const SchedulingError&) {
      ++rejected;
    }
  }
  return {accepted == 100 && worst <= tol, std::to_string(accepted) + " admissible inputs (" +
                                               std::to_string(rejected) + " rejected draws), max relative gap " +
                                               fmt("%.3e", worst) + " <= " + fmt("%.3e", tol)};
}

const char* kSweepConfig =
    "[problem]\nkind = q2\nnoise = gaussian\nsigma_f1 = 0.1\nsigma_g1 = 0.1\nsigma_g2 = 0.1\n"
    "[schedule]\nmode = theorem41\ndelta = 0.1\nDelta0 = 1\n"
    "[run]\ny0 = 1\n";

Outcome complexity_trend() {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig cfg = parse_config(kSweepConfig);
  const SweepSummary sw = sweep_eps(cfg, {0.02, 0.01, 0.005, 0.0025});
  const double secs = seconds_since(start);
  const bool all_ok = std::none_of(sw.rows.begin(), sw.rows.end(), [](const SweepRow& r) { return r.skipped; });
  const double slope = sw.slope.value_or(std::numeric_limits<double>::quiet_NaN());
  return {all_ok && slope >= 3.0 && slope <= 5.0 && secs < 1.0,
          "eps 0.02..0.0025, slope " + fmt("%.4f", slope) + ", T(0.0025) " + fmt("%.4g", sw.rows.back().T) + ", " +
              fmt("%.4f", secs) + " s"};
}

Outcome determinism() {
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  const fs::path dir = fs::temp_directory_path() / ("slipopt_acceptance_" + std::to_string(stamp));
  fs::create_directories(dir);
  const char* configs[] = {
      "[problem]\nkind = q2\nnoise = gaussian\nsigma_f1 = 0.1\nsigma_g1 = 0.1\nsigma_g2 = 0.1\n"
      "[algorithm]\nname = slip\n"
      "[schedule]\nalpha = 0.1\nbeta = 0.9\ngamma = 0.1\neta = 0.01\nT = 1000\nT0 = 50\n"
      "[run]\nseeds = 1-5\ny0 = 1\n",
      "[problem]\nkind = hyperclean\nnoise = gaussian\nsigma_f1 = 0.05\nsigma_g1 = 0.05\nsigma_g2 = 0.05\n"
      "[algorithm]\nname = doubleloop\n"
      "[schedule]\nalpha = 0.5\nbeta = 0.9\ngamma = 0.5\neta = 0.05\nT = 200\nT0 = 20\n"
      "[run]\nseeds = 11,12,13\n"};
  bool same = true;
  std::size_t files = 0;
  for (int c = 0; c < 2; ++c) {
    RunConfig cfg = parse_config(configs[c]);
    std::vector<ExperimentOutcome> outs;
    int variant = 0;
    for (const int workers : {1, 3, 3}) {
      cfg.run.out = (dir / ("cfg" + std::to_string(c) + "_v" + std::to_string(variant++))).string();
      outs.push_back(run_experiment(cfg, workers));
    }
    for (std::size_t i = 0; i < outs[0].seeds.size(); ++i) {
      const std::string ref = read_file(outs[0].seeds[i].trace_path);
      same = same && !ref.empty();
      for (std::size_t v = 1; v < outs.size(); ++v) same = same && read_file(outs[v].seeds[i].trace_path) == ref;
      ++files;
    }
  }
  fs::remove_all(dir);
  return {same, std::to_string(files) + " seed traces compared across workers {1, 3, 3}, " +
                    (same ? "byte-identical" : "MISMATCH")};
}

Outcome bias_inequality() {
  const BilevelProblem p = make_quadratic(q2_spec());
  const auto rows = collect_bias_observations(p, q2_benchmark_schedule(), q2_benchmark_start(), 1);
  const BiasReport r = check_bias_decomposition(p, rows);
  return {r.pass && r.max_ratio <= 1.0,
          std::to_string(r.rows) + " rows, max lhs/rhs " + fmt("%.4f", r.max_ratio) + " at row " +
              std::to_string(r.worst_row)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string fixtures = SLIPOPT_FIXTURE_DIR;
  bool write = false;
  app.add_option("--fixtures", fixtures, "Golden fixture directory");
  app.add_flag("--write-fixtures", write, "Regenerate golden fixtures");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"hypergradient correctness", hypergradient_correctness},
      {"fixed-point consistency", fixed_point_consistency},
      {"step normalization", step_normalization},
      {"oracle accounting", oracle_accounting},
      {"warm-start bound", warm_start_bound},
      {"tracking bound", tracking_bound},
      {"benchmark convergence", [&] { return benchmark_convergence(fixtures, write); }},
      {"hypercleaning effect", [&] { return hyperclean_effect(fixtures, write); }},
      {"schedule identities", schedule_identities},
      {"complexity trend", complexity_trend},
      {"determinism", determinism},
      {"bias inequality", bias_inequality},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
