#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slipopt/algorithms.hpp"
#include "slipopt/constants.hpp"
#include "slipopt/problem.hpp"

namespace slipopt {

/// Pinned benchmark: eta = 0.01, beta = 0.9, alpha = gamma = 0.1,
/// T0 = 50, T = 2000 (alpha_init = alpha).
ParamSchedule q2_benchmark_schedule();
/// x0 = (0,0), y0_init = (1,1), z0 = (0,0).
InitialPoint q2_benchmark_start();

/// Noise used by the warm-start and tracking ensembles: Gaussian, every sigma 0.1.
NoiseModel q2_ensemble_noise();

/// Warm-start step and length from the theorem formulas for a start
/// distance dist0.
struct WarmStartPlan {
  double alpha_init = 0.0;
  std::int64_t T0 = 0;
};
WarmStartPlan theorem_warm_start(const SmoothnessConstants& c, double delta, double dist0);

/// Runs the slip ensemble used by the tracking check: theorem warm start,
/// benchmark main loop, Gaussian noise, seeds mix64(base + i).
std::vector<Trace> q2_tracking_ensemble(std::int64_t n_seeds, double delta, std::uint64_t base_seed = 1);

struct SuiteCheck {
  std::string suite;
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Names accepted by run_suite.
std::vector<std::string> suite_names();

/// Runs one named verification suite (or "all"); throws std::invalid_argument
/// for an unknown name.
std::vector<SuiteCheck> run_suite(const std::string& name);

}  // namespace slipopt
