#include "slipopt/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "slipopt/synthetic.hpp"
#include "slipopt/verify.hpp"

namespace slipopt {

double weighted_tracking_average(const Trace& trace, double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("weighted_tracking_average: beta must lie in [0,1)");
  if (trace.empty()) return 0.0;
  double s = 0.0;
  double total = 0.0;
  for (const TraceRecord& r : trace) {
    if (!r.y_err) throw std::invalid_argument("weighted_tracking_average: row " + std::to_string(r.t) + " has no y_err");
    s = beta * s + *r.y_err;
    total += s;
  }
  return (1.0 - beta) * total / static_cast<double>(trace.size());
}

double tracking_bound_rhs(const SmoothnessConstants& c, double alpha, double R, double d0_sq, std::int64_t t,
                          std::int64_t N, double delta) {
  const double contraction = std::pow(1.0 - c.mu * alpha / 2.0, static_cast<double>(t)) * d0_sq;
  const double noise = 8.0 * alpha * c.sigma_g1 * c.sigma_g1 / c.mu;
  const double drift = 4.0 * R * R * c.l_g1 * c.l_g1 / (std::pow(c.mu, 4) * alpha * alpha);
  const double log_term = std::log(std::numbers::e * static_cast<double>(std::max<std::int64_t>(N, 1)) / delta);
  return contraction + (noise + drift) * log_term;
}

TrackingBoundReport bound_check_tracking(const std::vector<Trace>& traces, const ParamSchedule& schedule,
                                         const SmoothnessConstants& c, double delta, double inflation) {
  TrackingBoundReport rep;
  rep.seeds = static_cast<std::int64_t>(traces.size());
  if (traces.size() < 50) throw ConfigError("bound_check_tracking: needs at least 50 seeds");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("bound_check_tracking: delta must lie in (0,1)");
  if (!(inflation > 0.0)) throw ConfigError("bound_check_tracking: inflation must be positive");
  for (const Trace& tr : traces) {
    if (tr.empty() || !tr.front().y_err) {
      rep.available = false;
      return rep;
    }
  }
  rep.allowance = violation_allowance(delta, rep.seeds);
  for (const Trace& tr : traces) {
    const double d0_sq = *tr.front().y_err * *tr.front().y_err;
    bool violated = false;
    for (const TraceRecord& r : tr) {
      if (!r.y_err) continue;
      const double rhs = inflation * tracking_bound_rhs(c, schedule.alpha, schedule.eta, d0_sq, r.t, schedule.T, delta);
      const double lhs = *r.y_err * *r.y_err;
      rep.worst_ratio = std::max(rep.worst_ratio, lhs / rhs);
      if (lhs > rhs) violated = true;
    }
    if (violated) ++rep.violating_seeds;
  }
  rep.violation_rate = static_cast<double>(rep.violating_seeds) / static_cast<double>(rep.seeds);
  rep.pass = rep.violation_rate <= rep.allowance;
  return rep;
}

WeightReport hyperclean_weight_report(const Vector& x, const std::vector<int>& corrupted) {
  std::vector<char> is_bad(static_cast<std::size_t>(x.size()), 0);
  for (int i : corrupted) {
    if (i < 0 || i >= x.size()) throw ConfigError("hyperclean_weight_report: corrupted index out of range");
    is_bad[static_cast<std::size_t>(i)] = 1;
  }
  double clean = 0.0;
  double bad = 0.0;
  std::int64_t n_clean = 0;
  std::int64_t n_bad = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double w = logistic(x[i]);
    if (is_bad[static_cast<std::size_t>(i)]) {
      bad += w;
      ++n_bad;
    } else {
      clean += w;
      ++n_clean;
    }
  }
  WeightReport rep;
  rep.mean_sigma_clean = n_clean > 0 ? clean / static_cast<double>(n_clean) : 0.0;
  if (n_bad > 0) rep.mean_sigma_corrupted = bad / static_cast<double>(n_bad);
  return rep;
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 paired points");
  double mx = 0.0;
  double my = 0.0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw std::invalid_argument("loglog_slope: values must be positive");
    mx += std::log(xs[i]) / n;
    my += std::log(ys[i]) / n;
  }
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = std::log(xs[i]) - mx;
    sxy += dx * (std::log(ys[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw std::invalid_argument("loglog_slope: x values are all equal");
  return sxy / sxx;
}

}  // namespace slipopt
