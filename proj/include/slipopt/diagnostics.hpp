#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "slipopt/constants.hpp"
#include "slipopt/problem.hpp"
#include "slipopt/trace.hpp"

namespace slipopt {

/// (1 - beta)/T sum_{t<T} sum_{i<=t} beta^{t-i} y_err_i via the recurrence
/// S_t = beta S_{t-1} + y_err_t. Throws std::invalid_argument when a row lacks
/// y_err. An empty trace gives 0.
double weighted_tracking_average(const Trace& trace, double beta);

/// All-t high-probability tracking bound for lower-level SGD with drift
/// radius R:
///   (1 - mu alpha/2)^t d0^2 + (8 alpha sigma_g1^2/mu + 4 R^2 l_g1^2/(mu^4 alpha^2)) log(e N/delta).
double tracking_bound_rhs(const SmoothnessConstants& c, double alpha, double R, double d0_sq, std::int64_t t,
                          std::int64_t N, double delta);

struct TrackingBoundReport {
  bool available = true;  ///< false when traces carry no y_err (no analytic oracle)
  std::int64_t seeds = 0;
  std::int64_t violating_seeds = 0;
  double violation_rate = 0.0;
  double allowance = 0.0;
  double worst_ratio = 0.0;  ///< max over seeds and t of |y_t - y_t*|^2 / RHS
  bool pass = false;
};

/// Tests every row of every trace against tracking_bound_rhs (times
/// `inflation`) with R = schedule.eta, alpha = schedule.alpha,
/// N = schedule.T and d0 taken from the first row. Requires >= 50 traces.
TrackingBoundReport bound_check_tracking(const std::vector<Trace>& traces, const ParamSchedule& schedule,
                                         const SmoothnessConstants& c, double delta, double inflation = 1.0);

struct WeightReport {
  double mean_sigma_clean = 0.0;
  std::optional<double> mean_sigma_corrupted;  ///< absent when nothing was corrupted
};

/// Mean of logistic(x_i) over clean and corrupted training samples.
WeightReport hyperclean_weight_report(const Vector& x, const std::vector<int>& corrupted);

/// Least-squares slope of log(ys) against log(xs).
double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace slipopt
