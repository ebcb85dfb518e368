#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slipopt/constants.hpp"
#include "slipopt/problem.hpp"

namespace slipopt {

/// [problem] section.
struct ProblemConfig {
  std::string kind = "q2";  ///< q2 | quadratic | unbounded_smooth | hyperclean
  int dim_x = 2;            ///< quadratic / unbounded_smooth
  int dim_y = 2;
  std::uint64_t instance_seed = 1;  ///< random quadratic instance
  double a = 1.0;                   ///< unbounded_smooth growth rate
  std::string core = "q2";          ///< unbounded_smooth lower level: q2 | random
  double box_radius = 5.0;
  int n_train = 200;
  int n_val = 200;
  int feature_dim = 10;
  double corruption = 0.2;
  double lambda = 0.1;
  std::uint64_t data_seed = 7;
  NoiseModel noise;
};

/// [algorithm] section.
struct AlgorithmConfig {
  std::string name = "slip";  ///< slip | masoba | doubleloop | ttsa
  std::int64_t refine_interval = 2;
  std::int64_t refine_steps = 3;
  double eta_exponent = 0.6;
  double alpha_exponent = 0.4;
};

/// [schedule] section. Practical mode reads `practical`; theorem modes read
/// the accuracy inputs. Missing distances are computed from the analytic
/// oracle at x0.
struct ScheduleConfig {
  ScheduleMode mode = ScheduleMode::Practical;
  std::map<std::string, double> practical;
  double eps = 0.0;
  double delta = 0.05;
  std::optional<double> Delta0;
  std::optional<double> Delta_y0;
  std::optional<double> Delta_z0;
};

/// [run] section.
struct RunSettings {
  std::vector<std::uint64_t> seeds{1};
  double max_wall_seconds = 0.0;
  std::string out = "run";
  int workers = 1;
  std::int64_t fd_every = 50;
  /// Truncates theorem-mode horizons; 0 keeps the schedule's T.
  std::int64_t max_iters = 0;
  std::optional<std::vector<double>> x0;
  std::optional<std::vector<double>> y0;
  std::optional<std::vector<double>> z0;
};

struct RunConfig {
  ProblemConfig problem;
  AlgorithmConfig algorithm;
  ScheduleConfig schedule;
  RunSettings run;
};

/// Parses the INI-style config text. Unknown sections or keys, malformed
/// values and out-of-range settings raise ConfigError naming the key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Comma-separated list parsing shared with the command line.
std::vector<double> parse_real_list(const std::string& text);

}  // namespace slipopt
