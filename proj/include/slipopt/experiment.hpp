#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slipopt/algorithms.hpp"
#include "slipopt/config.hpp"
#include "slipopt/constants.hpp"
#include "slipopt/problem.hpp"

namespace slipopt {

/// Problem built from a [problem] section plus what the reports need.
struct BuiltProblem {
  BilevelProblem problem;
  std::vector<int> corrupted;  ///< hyperclean only
  bool hyperclean = false;
};

BuiltProblem build_problem(const ProblemConfig& cfg);

/// x0/y0/z0 from [run]; a single value is broadcast. Defaults: x0 = 0
/// (1 for hyperclean), y0 = 0, z0 = 0.
InitialPoint build_initial_point(const RunSettings& run, const BilevelProblem& problem, bool hyperclean);

/// Schedule for the config. Theorem modes fill the distances missing from the
/// config from the analytic oracle (or the exact solvers) at x0, and
/// `eps_override` replaces the configured eps. [run] max_iters truncates T.
ParamSchedule build_schedule(const RunConfig& cfg, const BilevelProblem& problem, const InitialPoint& init,
                             std::optional<double> eps_override = std::nullopt);

/// Dispatches on [algorithm] name.
RunResult execute_algorithm(const AlgorithmConfig& algo, const BilevelProblem& problem, const ParamSchedule& schedule,
                            const InitialPoint& init, std::uint64_t seed, const RunOptions& options);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::filesystem::path trace_path;
  RunStatus status = RunStatus::Ok;
  std::optional<std::int64_t> failed_at;
  std::int64_t skipped_steps = 0;
  std::size_t rows = 0;
  double wall_seconds = 0.0;
  Vector final_x;
};

struct ExperimentOutcome {
  std::vector<SeedOutcome> seeds;
  std::filesystem::path metadata_path;
  ParamSchedule schedule;
  bool any_failed = false;  ///< a run diverged (NaN/Inf)
};

/// Runs every seed (on `workers` threads; 0 means the config value), writes
/// `<out>_seed<k>.csv` per seed and `<out>_meta.json` after all runs finish.
ExperimentOutcome run_experiment(const RunConfig& cfg, int workers = 0);

struct SweepRow {
  double eps = 0.0;
  bool skipped = false;
  std::string binding_term;
  double eps_ceiling = 0.0;
  double T = 0.0;  ///< ceil of the real-valued count; may exceed 2^63
  std::int64_t T0 = 0;
  double total_calls = 0.0;  ///< closed form; may exceed 2^64
  std::optional<double> avg_grad_norm;
};

struct SweepSummary {
  std::vector<SweepRow> rows;
  std::optional<double> slope;  ///< d log T / d log(1/eps) over the admissible rows
};

/// Evaluates the theorem-mode schedule at each eps. When [run] max_iters is
/// positive and T <= max_iters, the first seed is also run and the mean
/// grad_norm over its trace is reported.
SweepSummary sweep_eps(const RunConfig& cfg, const std::vector<double>& eps_list);

std::string format_sweep_csv(const SweepSummary& summary);

/// Closed-form oracle-call total for an algorithm with the given schedule.
double closed_form_calls(const AlgorithmConfig& algo, std::int64_t T0, double T);

}  // namespace slipopt
