#include "slipopt/problem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace slipopt {

namespace {

// Channel ids separate the oracles inside one sample's random stream.
enum Channel : std::uint32_t { kGradXF = 0, kGradYF = 1, kGradYG = 2, kHvpXY = 3, kHvpYY = 4, kProbe = 7 };

// Gaussian vector with E|v|^2 = scale^2.
Vector gaussian_vector(const Sample& s, Channel channel, Eigen::Index dim, double scale) {
  Vector v(dim);
  const CounterRng rng(s, channel);
  const double coord = scale / std::sqrt(static_cast<double>(dim));
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = coord * rng.normal(static_cast<std::uint64_t>(i));
  return v;
}

// Gaussian direction whose norm is clipped to `bound`; symmetric, so zero mean.
Vector clipped_vector(const Sample& s, Channel channel, Eigen::Index dim, double bound) {
  Vector v = gaussian_vector(s, channel, dim, bound);
  const double n = v.norm();
  if (n > bound) v *= bound / n;
  return v;
}

Vector perturb(Vector value, NoiseModel::Kind kind, const Sample& s, Channel channel, double gaussian_scale,
               double clip_bound) {
  switch (kind) {
    case NoiseModel::Kind::Noiseless:
      return value;
    case NoiseModel::Kind::Gaussian:
      if (gaussian_scale > 0.0) value += gaussian_vector(s, channel, value.size(), gaussian_scale);
      return value;
    case NoiseModel::Kind::BoundedAlmostSure:
      if (clip_bound > 0.0) value += clipped_vector(s, channel, value.size(), clip_bound);
      return value;
  }
  return value;
}

std::string dims(const Vector& v) { return std::to_string(v.size()); }

}  // namespace

Matrix Objective::hess_yy_lower(const Vector& x, const Vector& y) const {
  const int n = dim_y();
  Matrix h(n, n);
  for (int j = 0; j < n; ++j) h.col(j) = hvp_yy_lower(x, y, Vector::Unit(n, j));
  return 0.5 * (h + h.transpose());
}

std::string to_string(NoiseModel::Kind kind) {
  switch (kind) {
    case NoiseModel::Kind::Noiseless: return "none";
    case NoiseModel::Kind::Gaussian: return "gaussian";
    case NoiseModel::Kind::BoundedAlmostSure: return "bounded";
  }
  return "unknown";
}

StochasticOracle::StochasticOracle(std::shared_ptr<const Objective> objective, NoiseModel noise)
    : objective_(std::move(objective)), noise_(noise) {
  if (!objective_) throw ConfigError("StochasticOracle: null objective");
  for (double s : {noise_.sigma_f1, noise_.sigma_g1, noise_.sigma_g2, noise_.sigma_z}) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("StochasticOracle: noise levels must be finite and >= 0");
  }
}

Vector StochasticOracle::grad_x_F(const Vector& x, const Vector& y, const Sample& s) const {
  check_dimensions(*objective_, x, y, nullptr);
  return perturb(objective_->grad_x_upper(x, y), noise_.kind, s, kGradXF, noise_.sigma_f1, noise_.sigma_f1);
}

Vector StochasticOracle::grad_y_F(const Vector& x, const Vector& y, const Sample& s) const {
  check_dimensions(*objective_, x, y, nullptr);
  return perturb(objective_->grad_y_upper(x, y), noise_.kind, s, kGradYF, noise_.sigma_f1, noise_.sigma_f1);
}

Vector StochasticOracle::grad_y_G(const Vector& x, const Vector& y, const Sample& s) const {
  check_dimensions(*objective_, x, y, nullptr);
  Vector g = objective_->grad_y_lower(x, y);
  if (noise_.kind != NoiseModel::Kind::Noiseless && noise_.sigma_g1 > 0.0) {
    g += gaussian_vector(s, kGradYG, g.size(), noise_.sigma_g1);
  }
  return g;
}

Vector StochasticOracle::hvp_xy_G(const Vector& x, const Vector& y, const Vector& z, const Sample& s) const {
  check_dimensions(*objective_, x, y, &z);
  const double scale = noise_.sigma_g2 * z.norm();
  return perturb(objective_->cross_hvp_lower(x, y, z), noise_.kind, s, kHvpXY, scale, scale);
}

Vector StochasticOracle::hvp_yy_G(const Vector& x, const Vector& y, const Vector& z, const Sample& s) const {
  check_dimensions(*objective_, x, y, &z);
  return perturb(objective_->hvp_yy_lower(x, y, z), noise_.kind, s, kHvpYY, noise_.sigma_g2 * z.norm(),
                 noise_.sigma_z);
}

double BilevelProblem::phi(const Vector& x) const {
  if (!analytic) throw ConfigError("phi: problem '" + name + "' has no analytic oracle");
  return objective->upper(x, analytic->y_star(x));
}

void check_dimensions(const Objective& obj, const Vector& x, const Vector& y, const Vector* z) {
  if (x.size() != obj.dim_x() || y.size() != obj.dim_y() || (z != nullptr && z->size() != obj.dim_y())) {
    throw ConfigError("dimension mismatch: expected x in R^" + std::to_string(obj.dim_x()) + " and y, z in R^" +
                      std::to_string(obj.dim_y()) + ", got x " + dims(x) + ", y " + dims(y) +
                      (z != nullptr ? ", z " + dims(*z) : std::string()));
  }
}

Vector hypergrad_estimate(const Vector& x, const Vector& y, const Vector& z, const Sample& s1, const Sample& s2,
                          const StochasticOracle& oracle) {
  check_dimensions(oracle.objective(), x, y, &z);
  return oracle.grad_x_F(x, y, s1) - oracle.hvp_xy_G(x, y, z, s2);
}

UnbiasednessReport empirical_unbiasedness_check(const BilevelProblem& problem, const Vector& x, const Vector& y,
                                                std::int64_t n, std::uint64_t rng_seed) {
  UnbiasednessReport report;
  const StochasticOracle& oracle = problem.oracle;
  const NoiseModel& noise = oracle.noise();
  if (oracle.noiseless()) return report;

  const Objective& obj = oracle.objective();
  const Vector z = Vector::Ones(obj.dim_y()) / std::sqrt(static_cast<double>(obj.dim_y()));
  check_dimensions(obj, x, y, &z);

  const bool bounded = noise.kind == NoiseModel::Kind::BoundedAlmostSure;
  const std::array<double, 5> sigma = {noise.sigma_f1, noise.sigma_f1, noise.sigma_g1, noise.sigma_g2,
                                       bounded ? noise.sigma_z : noise.sigma_g2};
  const bool all_zero = std::all_of(sigma.begin(), sigma.end(), [](double s) { return s == 0.0; });
  if (n < 1 || (n < 100 && !all_zero)) {
    throw ConfigError("empirical_unbiasedness_check: n must be >= 100 for a calibrated check, got " +
                      std::to_string(n));
  }

  const std::array<Vector, 5> exact = {obj.grad_x_upper(x, y), obj.grad_y_upper(x, y), obj.grad_y_lower(x, y),
                                       obj.cross_hvp_lower(x, y, z), obj.hvp_yy_lower(x, y, z)};
  std::array<Vector, 5> sum;
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k] = Vector::Zero(exact[k].size());

  for (std::int64_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::uint64_t>(i);
    sum[0] += oracle.grad_x_F(x, y, {Stream::XiPrime, c, rng_seed});
    sum[1] += oracle.grad_y_F(x, y, {Stream::Xi, c, rng_seed});
    sum[2] += oracle.grad_y_G(x, y, {Stream::Pi, c, rng_seed});
    sum[3] += oracle.hvp_xy_G(x, y, z, {Stream::ZetaPrime, c, rng_seed});
    sum[4] += oracle.hvp_yy_G(x, y, z, {Stream::Zeta, c, rng_seed});
  }

  const double root_n = std::sqrt(static_cast<double>(n));
  for (std::size_t k = 0; k < sum.size(); ++k) {
    const double gap = (sum[k] / static_cast<double>(n) - exact[k]).norm();
    double dev = 0.0;
    if (sigma[k] > 0.0) {
      dev = gap / (sigma[k] / root_n);
    } else if (gap > 8.0 * static_cast<double>(n) * std::numeric_limits<double>::epsilon() *
                           std::max(1.0, exact[k].norm())) {
      dev = std::numeric_limits<double>::infinity();
    }
    report.deviation_in_sigmas[k] = dev;
    report.max_deviation_in_sigmas = std::max(report.max_deviation_in_sigmas, dev);
  }
  return report;
}

ConvexityProbeReport strong_convexity_probe(const BilevelProblem& problem, double mu, std::int64_t probes,
                                            std::uint64_t seed, double radius, double rel_tol) {
  const Objective& obj = *problem.objective;
  ConvexityProbeReport report;
  report.probes = probes;
  const int dx = obj.dim_x();
  const int dy = obj.dim_y();
  for (std::int64_t p = 0; p < probes; ++p) {
    const CounterRng rng({Stream::PiTilde, static_cast<std::uint64_t>(p), seed}, kProbe);
    std::uint64_t k = 0;
    auto draw = [&](int dim) {
      Vector v(dim);
      for (int i = 0; i < dim; ++i) v[i] = radius * (2.0 * rng.uniform(k++) - 1.0);
      return v;
    };
    const Vector x = draw(dx);
    const Vector y1 = draw(dy);
    const Vector y2 = draw(dy);
    const Vector d = y2 - y1;
    const double lhs = obj.lower(x, y2);
    const double rhs = obj.lower(x, y1) + obj.grad_y_lower(x, y1).dot(d) + 0.5 * mu * d.squaredNorm();
    const double gap = (rhs - lhs) / std::max(1.0, std::abs(lhs));
    report.worst_relative_gap = std::max(report.worst_relative_gap, gap);
    if (gap > rel_tol) ++report.violations;
  }
  return report;
}

}  // namespace slipopt
