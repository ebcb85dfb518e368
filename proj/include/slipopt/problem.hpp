#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "slipopt/constants.hpp"
#include "slipopt/rng.hpp"

namespace slipopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Invalid problem or run configuration (dimension mismatch, bad parameter).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Deterministic upper-level objective f and lower-level objective g together
/// with the first and second derivatives the algorithms consume.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual int dim_x() const = 0;
  virtual int dim_y() const = 0;

  virtual double upper(const Vector& x, const Vector& y) const = 0;
  virtual double lower(const Vector& x, const Vector& y) const = 0;

  virtual Vector grad_x_upper(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_y_upper(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_y_lower(const Vector& x, const Vector& y) const = 0;
  /// Mixed second derivative of g applied to z; result lives in R^{d_x}.
  virtual Vector cross_hvp_lower(const Vector& x, const Vector& y, const Vector& z) const = 0;
  virtual Vector hvp_yy_lower(const Vector& x, const Vector& y, const Vector& z) const = 0;
  /// Dense lower-level Hessian in y. The default assembles it column by column.
  virtual Matrix hess_yy_lower(const Vector& x, const Vector& y) const;
};

/// Noise attached to the deterministic derivatives.
struct NoiseModel {
  enum class Kind { Noiseless, Gaussian, BoundedAlmostSure };

  Kind kind = Kind::Noiseless;
  double sigma_f1 = 0.0;
  double sigma_g1 = 0.0;
  double sigma_g2 = 0.0;
  double sigma_z = 0.0;

  static NoiseModel noiseless() { return {}; }
  static NoiseModel gaussian(double sigma_f1, double sigma_g1, double sigma_g2) {
    return {Kind::Gaussian, sigma_f1, sigma_g1, sigma_g2, 0.0};
  }
  static NoiseModel bounded(double sigma_f1, double sigma_g1, double sigma_g2, double sigma_z) {
    return {Kind::BoundedAlmostSure, sigma_f1, sigma_g1, sigma_g2, sigma_z};
  }
};

std::string to_string(NoiseModel::Kind kind);

/// The five stochastic oracles. Each is a pure function of (point, sample).
///
/// Gaussian model: zero-mean Gaussian perturbation with E|noise|^2 = sigma^2
/// (sigma_f1 for the two upper-level gradients, sigma_g1 for the lower-level
/// gradient). For the two Hessian-vector products the perturbation has second
/// moment sigma_g2^2 |z|^2, i.e. the product with a random matrix of spectral
/// second moment sigma_g2^2.
///
/// Bounded model: the upper-level gradients and the mixed product are
/// perturbed by a Gaussian direction clipped to norm sigma_f1 and
/// sigma_g2 |z|; the yy product is perturbed after multiplication and clipped
/// to sigma_z. The lower-level gradient keeps Gaussian (light-tailed) noise.
class StochasticOracle {
 public:
  StochasticOracle() = default;
  StochasticOracle(std::shared_ptr<const Objective> objective, NoiseModel noise);

  Vector grad_x_F(const Vector& x, const Vector& y, const Sample& s) const;
  Vector grad_y_F(const Vector& x, const Vector& y, const Sample& s) const;
  Vector grad_y_G(const Vector& x, const Vector& y, const Sample& s) const;
  Vector hvp_xy_G(const Vector& x, const Vector& y, const Vector& z, const Sample& s) const;
  Vector hvp_yy_G(const Vector& x, const Vector& y, const Vector& z, const Sample& s) const;

  const NoiseModel& noise() const { return noise_; }
  const Objective& objective() const { return *objective_; }
  bool noiseless() const { return noise_.kind == NoiseModel::Kind::Noiseless; }

 private:
  std::shared_ptr<const Objective> objective_;
  NoiseModel noise_;
};

/// y*(x), z*(x) and grad Phi(x) evaluated together.
struct AnalyticPoint {
  Vector y_star;
  Vector z_star;
  Vector hypergrad;
};

/// Exact ground truth, used for verification and trace metrics only.
struct AnalyticOracle {
  std::function<AnalyticPoint(const Vector&)> evaluate;

  Vector y_star(const Vector& x) const { return evaluate(x).y_star; }
  Vector z_star(const Vector& x) const { return evaluate(x).z_star; }
  Vector hypergrad(const Vector& x) const { return evaluate(x).hypergrad; }
};

/// One bilevel instance: objectives, stochastic oracles, optional ground truth
/// and the declared regularity constants (already passed through
/// derive_constants).
struct BilevelProblem {
  std::string name;
  std::shared_ptr<const Objective> objective;
  StochasticOracle oracle;
  std::optional<AnalyticOracle> analytic;
  SmoothnessConstants constants;

  int dim_x() const { return objective->dim_x(); }
  int dim_y() const { return objective->dim_y(); }

  /// Phi(x) = f(x, y*(x)); requires the analytic oracle.
  double phi(const Vector& x) const;
};

/// Stochastic hypergradient grad_x F(x,y;s1) - grad_xy G(x,y;s2) z.
Vector hypergrad_estimate(const Vector& x, const Vector& y, const Vector& z, const Sample& s1, const Sample& s2,
                          const StochasticOracle& oracle);

/// Throws ConfigError unless (x, y[, z]) match the problem dimensions.
void check_dimensions(const Objective& obj, const Vector& x, const Vector& y, const Vector* z = nullptr);

struct UnbiasednessReport {
  /// |mean of n draws - deterministic value| in units of sigma/sqrt(n), per
  /// oracle in the order grad_x_F, grad_y_F, grad_y_G, hvp_xy_G, hvp_yy_G.
  std::array<double, 5> deviation_in_sigmas{};
  double max_deviation_in_sigmas = 0.0;
  bool pass() const { return max_deviation_in_sigmas <= 4.0; }
};

/// Averages n draws of every oracle at (x, y) (and z = ones / sqrt(d_y) for
/// the two products) and compares with the deterministic value. Requires n >= 100.
UnbiasednessReport empirical_unbiasedness_check(const BilevelProblem& problem, const Vector& x, const Vector& y,
                                                std::int64_t n, std::uint64_t rng_seed);

struct ConvexityProbeReport {
  std::int64_t probes = 0;
  std::int64_t violations = 0;
  /// Largest (rhs - lhs) / max(1, |lhs|) over all probes; <= 0 means no violation.
  double worst_relative_gap = -std::numeric_limits<double>::infinity();
};

/// Checks g(x,y2) >= g(x,y1) + <grad_y g(x,y1), y2-y1> + mu/2 |y2-y1|^2 on
/// random probes drawn uniformly from [-radius, radius]^d.
ConvexityProbeReport strong_convexity_probe(const BilevelProblem& problem, double mu, std::int64_t probes,
                                            std::uint64_t seed, double radius = 3.0, double rel_tol = 1e-9);

}  // namespace slipopt
