#include "slipopt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "slipopt/verify.hpp"

namespace slipopt {

namespace {

enum DataChannel : std::uint32_t { kTrainRows = 10, kValRows = 11, kTruth = 12, kShuffle = 13, kSpec = 14 };

std::string join(const Vector& v) {
  std::ostringstream os;
  os.precision(6);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  return os.str();
}

// Lower level shared by the quadratic and cosh families.
struct QuadraticCore {
  Matrix A;
  Matrix B;
  Vector c;
  Vector e;
  Eigen::LLT<Matrix> llt;

  double lower(const Vector& x, const Vector& y) const { return 0.5 * y.dot(A * y) - y.dot(B * x + c); }
  Vector grad_y_lower(const Vector& x, const Vector& y) const { return A * y - B * x - c; }
  Vector cross(const Vector& z) const { return -B.transpose() * z; }
  Vector y_star(const Vector& x) const { return llt.solve(B * x + c); }
};

QuadraticCore make_core(const QuadraticSpec& spec, double& mu, double& lmax) {
  const Eigen::Index dy = spec.A.rows();
  if (spec.A.cols() != dy || dy == 0) throw ConfigError("quadratic: A must be a non-empty square matrix");
  if (spec.B.rows() != dy || spec.B.cols() == 0) throw ConfigError("quadratic: B must be d_y x d_x with d_x > 0");
  if (spec.c.size() != dy || spec.e.size() != dy) throw ConfigError("quadratic: c and e must have length d_y");
  if (!(spec.r >= 0.0)) throw ConfigError("quadratic: r must be >= 0");
  if ((spec.A - spec.A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, spec.A.cwiseAbs().maxCoeff())) {
    throw ConfigError("quadratic: A is not symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(spec.A, Eigen::EigenvaluesOnly);
  const Vector ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 0.0)) {
    throw ConfigError("quadratic: A is not positive definite; eigenvalues [" + join(ev) + "]");
  }
  mu = ev.minCoeff();
  lmax = ev.maxCoeff();
  QuadraticCore core{spec.A, spec.B, spec.c, spec.e, Eigen::LLT<Matrix>(spec.A)};
  return core;
}

// sup of |y*(x) - e| over the box; y*(x) - e is affine so the sup sits at a corner.
double box_l_f0(const QuadraticCore& q, double radius) {
  const Eigen::Index dx = q.B.cols();
  if (dx <= 12) {
    double best = 0.0;
    const std::uint64_t corners = std::uint64_t{1} << dx;
    Vector x(dx);
    for (std::uint64_t m = 0; m < corners; ++m) {
      for (Eigen::Index i = 0; i < dx; ++i) x[i] = ((m >> i) & 1U) ? radius : -radius;
      best = std::max(best, (q.y_star(x) - q.e).norm());
    }
    return best;
  }
  const Eigen::JacobiSVD<Matrix> svd(q.B);
  const double inv_mu = q.llt.solve(Matrix::Identity(q.A.rows(), q.A.rows())).norm();
  return inv_mu * (svd.singularValues()[0] * radius * std::sqrt(static_cast<double>(dx)) + q.c.norm()) + q.e.norm();
}

double spectral_norm(const Matrix& m) { return Eigen::JacobiSVD<Matrix>(m).singularValues()[0]; }

void attach_noise(SmoothnessConstants& c, const NoiseModel& noise) {
  c.sigma_f1 = noise.sigma_f1;
  c.sigma_g1 = noise.sigma_g1;
  c.sigma_g2 = noise.sigma_g2;
  c.sigma_z = noise.sigma_z;
}

class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(QuadraticCore core, double r) : q_(std::move(core)), r_(r) {}

  int dim_x() const override { return static_cast<int>(q_.B.cols()); }
  int dim_y() const override { return static_cast<int>(q_.A.rows()); }
  double upper(const Vector& x, const Vector& y) const override {
    return 0.5 * (y - q_.e).squaredNorm() + 0.5 * r_ * x.squaredNorm();
  }
  double lower(const Vector& x, const Vector& y) const override { return q_.lower(x, y); }
  Vector grad_x_upper(const Vector& x, const Vector&) const override { return r_ * x; }
  Vector grad_y_upper(const Vector&, const Vector& y) const override { return y - q_.e; }
  Vector grad_y_lower(const Vector& x, const Vector& y) const override { return q_.grad_y_lower(x, y); }
  Vector cross_hvp_lower(const Vector&, const Vector&, const Vector& z) const override { return q_.cross(z); }
  Vector hvp_yy_lower(const Vector&, const Vector&, const Vector& z) const override { return q_.A * z; }
  Matrix hess_yy_lower(const Vector&, const Vector&) const override { return q_.A; }

  const QuadraticCore& core() const { return q_; }
  double r() const { return r_; }

 private:
  QuadraticCore q_;
  double r_;
};

class CoshObjective final : public Objective {
 public:
  CoshObjective(QuadraticCore core, double a) : q_(std::move(core)), a_(a) {}

  int dim_x() const override { return static_cast<int>(q_.B.cols()); }
  int dim_y() const override { return static_cast<int>(q_.A.rows()); }
  double upper(const Vector& x, const Vector& y) const override {
    guard(x);
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += std::cosh(a_ * x[i]) - 1.0;
    return s + 0.5 * (y - q_.e).squaredNorm();
  }
  double lower(const Vector& x, const Vector& y) const override { return q_.lower(x, y); }
  Vector grad_x_upper(const Vector& x, const Vector&) const override {
    guard(x);
    return (a_ * x.array()).sinh().matrix() * a_;
  }
  Vector grad_y_upper(const Vector&, const Vector& y) const override { return y - q_.e; }
  Vector grad_y_lower(const Vector& x, const Vector& y) const override { return q_.grad_y_lower(x, y); }
  Vector cross_hvp_lower(const Vector&, const Vector&, const Vector& z) const override { return q_.cross(z); }
  Vector hvp_yy_lower(const Vector&, const Vector&, const Vector& z) const override { return q_.A * z; }
  Matrix hess_yy_lower(const Vector&, const Vector&) const override { return q_.A; }

  const QuadraticCore& core() const { return q_; }

 private:
  void guard(const Vector& x) const {
    if (x.size() > 0 && x.cwiseAbs().maxCoeff() > 700.0 / a_) {
      throw std::range_error("unbounded-smooth: |x|_inf exceeds 700/a, cosh would overflow");
    }
  }

  QuadraticCore q_;
  double a_;
};

// Binary logistic loss log(1 + exp(-u)) and its derivatives, evaluated stably.
double logloss(double u) { return u > 0 ? std::log1p(std::exp(-u)) : -u + std::log1p(std::exp(u)); }
double logloss_d1(double u) { return -logistic(-u); }
double logloss_d2(double u) { return logistic(u) * logistic(-u); }

class HypercleanObjective final : public Objective {
 public:
  HypercleanObjective(std::shared_ptr<const HypercleanData> data, double lambda)
      : d_(std::move(data)), lambda_(lambda) {}

  int dim_x() const override { return static_cast<int>(d_->train_features.rows()); }
  int dim_y() const override { return static_cast<int>(d_->train_features.cols()); }

  double upper(const Vector&, const Vector& y) const override {
    const Vector u = margins(d_->val_features, d_->val_labels, y);
    double s = 0.0;
    for (Eigen::Index j = 0; j < u.size(); ++j) s += logloss(u[j]);
    return s / static_cast<double>(u.size());
  }
  double lower(const Vector& x, const Vector& y) const override {
    const Vector u = margins(d_->train_features, d_->train_labels, y);
    double s = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) s += logistic(x[i]) * logloss(u[i]);
    return s / static_cast<double>(u.size()) + lambda_ * y.squaredNorm();
  }
  Vector grad_x_upper(const Vector& x, const Vector&) const override { return Vector::Zero(x.size()); }
  Vector grad_y_upper(const Vector&, const Vector& y) const override {
    const Vector u = margins(d_->val_features, d_->val_labels, y);
    Vector w(u.size());
    for (Eigen::Index j = 0; j < u.size(); ++j) w[j] = logloss_d1(u[j]) * d_->val_labels[j];
    return d_->val_features.transpose() * w / static_cast<double>(u.size());
  }
  Vector grad_y_lower(const Vector& x, const Vector& y) const override {
    const Vector u = margins(d_->train_features, d_->train_labels, y);
    Vector w(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) w[i] = logistic(x[i]) * logloss_d1(u[i]) * d_->train_labels[i];
    return d_->train_features.transpose() * w / static_cast<double>(u.size()) + 2.0 * lambda_ * y;
  }
  Vector cross_hvp_lower(const Vector& x, const Vector& y, const Vector& z) const override {
    const Vector u = margins(d_->train_features, d_->train_labels, y);
    const Vector az = d_->train_features * z;
    Vector out(u.size());
    const double n = static_cast<double>(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double ds = logistic(x[i]) * logistic(-x[i]);
      out[i] = ds * logloss_d1(u[i]) * d_->train_labels[i] * az[i] / n;
    }
    return out;
  }
  Vector hvp_yy_lower(const Vector& x, const Vector& y, const Vector& z) const override {
    const Vector u = margins(d_->train_features, d_->train_labels, y);
    const Vector az = d_->train_features * z;
    Vector w(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) w[i] = logistic(x[i]) * logloss_d2(u[i]) * az[i];
    return d_->train_features.transpose() * w / static_cast<double>(u.size()) + 2.0 * lambda_ * z;
  }
  Matrix hess_yy_lower(const Vector& x, const Vector& y) const override {
    const Vector u = margins(d_->train_features, d_->train_labels, y);
    Vector w(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) w[i] = logistic(x[i]) * logloss_d2(u[i]);
    Matrix h = d_->train_features.transpose() * w.asDiagonal() * d_->train_features / static_cast<double>(u.size());
    h.diagonal().array() += 2.0 * lambda_;
    return h;
  }

 private:
  static Vector margins(const Matrix& features, const Vector& labels, const Vector& y) {
    return (features * y).cwiseProduct(labels);
  }

  std::shared_ptr<const HypercleanData> d_;
  double lambda_;
};

Vector normal_vector(std::uint64_t seed, std::uint64_t row, std::uint32_t channel, int dim) {
  const CounterRng rng({Stream::PiTilde, row, seed}, channel);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal(static_cast<std::uint64_t>(i));
  return v;
}

}  // namespace

double logistic(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

QuadraticSpec q2_spec() {
  QuadraticSpec s;
  s.A = 2.0 * Matrix::Identity(2, 2);
  s.B = Matrix::Identity(2, 2);
  s.c = Vector::Zero(2);
  s.e = Vector::Ones(2);
  s.r = 1.0;
  return s;
}

QuadraticSpec random_quadratic_spec(int dim_x, int dim_y, std::uint64_t seed) {
  if (dim_x < 1 || dim_y < 1) throw ConfigError("random_quadratic_spec: dimensions must be positive");
  const std::uint64_t key = mix64(seed);
  Matrix M(dim_y, dim_y);
  for (int i = 0; i < dim_y; ++i) M.row(i) = normal_vector(key, static_cast<std::uint64_t>(i), kSpec, dim_y);
  QuadraticSpec s;
  s.A = 0.5 * Matrix::Identity(dim_y, dim_y) + M.transpose() * M / dim_y;
  s.A = 0.5 * (s.A + s.A.transpose());
  s.B = Matrix(dim_y, dim_x);
  for (int i = 0; i < dim_y; ++i) {
    s.B.row(i) = normal_vector(key, static_cast<std::uint64_t>(dim_y + i), kSpec, dim_x) / std::sqrt(dim_x);
  }
  s.c = normal_vector(key, static_cast<std::uint64_t>(2 * dim_y), kSpec, dim_y);
  s.e = normal_vector(key, static_cast<std::uint64_t>(2 * dim_y + 1), kSpec, dim_y);
  s.r = 0.5;
  return s;
}

BilevelProblem make_quadratic(const QuadraticSpec& spec, NoiseModel noise) {
  double mu = 0.0;
  double lmax = 0.0;
  QuadraticCore core = make_core(spec, mu, lmax);

  SmoothnessConstants c;
  c.mu = mu;
  c.l_g1 = std::max(lmax, spectral_norm(spec.B));
  c.l_g2 = 0.0;
  c.l_f0 = spec.l_f0 ? *spec.l_f0 : box_l_f0(core, spec.box_radius);
  c.L_x0 = spec.r;
  c.L_x1 = spec.L_x1;
  c.L_y0 = 1.0;
  c.L_y1 = spec.L_y1;
  attach_noise(c, noise);

  auto obj = std::make_shared<QuadraticObjective>(std::move(core), spec.r);
  BilevelProblem p;
  p.name = "quadratic";
  p.objective = obj;
  p.oracle = StochasticOracle(obj, noise);
  p.analytic = AnalyticOracle{[obj](const Vector& x) {
    const QuadraticCore& q = obj->core();
    AnalyticPoint a;
    a.y_star = q.y_star(x);
    a.z_star = q.llt.solve(a.y_star - q.e);
    a.hypergrad = obj->r() * x + q.B.transpose() * a.z_star;
    return a;
  }};
  p.constants = derive_constants(c);
  return p;
}

BilevelProblem make_unbounded_smooth(const UnboundedSmoothSpec& spec, NoiseModel noise) {
  if (!(spec.a > 0.0)) throw ConfigError("unbounded-smooth: a must be positive");
  double mu = 0.0;
  double lmax = 0.0;
  QuadraticCore core = make_core(spec.core, mu, lmax);

  SmoothnessConstants c;
  c.mu = mu;
  c.l_g1 = std::max(lmax, spectral_norm(spec.core.B));
  c.l_g2 = 0.0;
  c.l_f0 = spec.core.l_f0 ? *spec.core.l_f0 : box_l_f0(core, spec.core.box_radius);
  // a^2 cosh(a t) <= a^2 + a |a sinh(a t)|
  c.L_x0 = spec.a * spec.a;
  c.L_x1 = spec.a;
  c.L_y0 = 1.0;
  c.L_y1 = spec.core.L_y1;
  attach_noise(c, noise);

  auto obj = std::make_shared<CoshObjective>(std::move(core), spec.a);
  BilevelProblem p;
  p.name = "unbounded_smooth";
  p.objective = obj;
  p.oracle = StochasticOracle(obj, noise);
  p.analytic = AnalyticOracle{[obj](const Vector& x) {
    const QuadraticCore& q = obj->core();
    AnalyticPoint a;
    a.y_star = q.y_star(x);
    a.z_star = q.llt.solve(a.y_star - q.e);
    a.hypergrad = obj->grad_x_upper(x, a.y_star) + q.B.transpose() * a.z_star;
    return a;
  }};
  p.constants = derive_constants(c);
  return p;
}

Vector HypercleanInstance::initial_weights() const { return Vector::Ones(problem.dim_x()); }

HypercleanInstance make_hyperclean(const HypercleanSpec& spec, NoiseModel noise) {
  if (!(spec.corruption >= 0.0 && spec.corruption <= 1.0)) {
    throw ConfigError("hyperclean: corruption rate must lie in [0, 1]");
  }
  if (!(spec.lambda > 0.0)) throw ConfigError("hyperclean: lambda must be positive");
  if (spec.n_train < 1 || spec.n_val < 1 || spec.feature_dim < 1) {
    throw ConfigError("hyperclean: n_train, n_val and feature_dim must be positive");
  }

  const std::uint64_t key = mix64(spec.seed);
  const int d = spec.feature_dim;
  const Vector w_true = normal_vector(key, 0, kTruth, d);
  auto data = std::make_shared<HypercleanData>();
  auto fill = [&](Matrix& F, Vector& labels, int n, DataChannel channel) {
    F.resize(n, d);
    labels.resize(n);
    for (int i = 0; i < n; ++i) {
      F.row(i) = normal_vector(key, static_cast<std::uint64_t>(i), channel, d);
      labels[i] = F.row(i).dot(w_true) >= 0.0 ? 1.0 : -1.0;
    }
  };
  fill(data->train_features, data->train_labels, spec.n_train, kTrainRows);
  fill(data->val_features, data->val_labels, spec.n_val, kValRows);

  std::vector<int> order(static_cast<std::size_t>(spec.n_train));
  std::iota(order.begin(), order.end(), 0);
  const CounterRng shuffle({Stream::PiTilde, 0, key}, kShuffle);
  for (int i = spec.n_train - 1; i > 0; --i) {
    const auto j = static_cast<int>(shuffle.uniform(static_cast<std::uint64_t>(i)) * (i + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(std::min(j, i))]);
  }
  const auto flips = static_cast<std::size_t>(std::floor(spec.corruption * spec.n_train));
  data->corrupted.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(flips));
  std::sort(data->corrupted.begin(), data->corrupted.end());
  for (int i : data->corrupted) data->train_labels[i] = -data->train_labels[i];

  const double n = spec.n_train;
  const double train_sq = spectral_norm(data->train_features);
  const double val_sq = spectral_norm(data->val_features);
  const double max_row = data->train_features.rowwise().norm().maxCoeff();
  const double max_val_row = data->val_features.rowwise().norm().maxCoeff();

  SmoothnessConstants c;
  c.mu = 2.0 * spec.lambda;
  // Curvature bounds from |sigma'|, |l''| <= 1/4 and |sigma|, |l'| <= 1.
  c.l_g1 = std::max({2.0 * spec.lambda + 0.25 * train_sq * train_sq / n, 0.25 * train_sq / n,
                     0.1 * max_row * max_row / n});
  c.l_g2 = 0.1 * std::pow(max_row, 3) / n + 0.25 * max_row * max_row / n;
  c.l_f0 = max_val_row;
  c.L_x0 = 0.0;
  c.L_x1 = 1.0;
  c.L_y0 = 0.25 * val_sq * val_sq / spec.n_val;
  c.L_y1 = 0.0;
  attach_noise(c, noise);

  auto obj = std::make_shared<HypercleanObjective>(data, spec.lambda);
  HypercleanInstance inst{BilevelProblem{}, data};
  inst.problem.name = "hyperclean";
  inst.problem.objective = obj;
  inst.problem.oracle = StochasticOracle(obj, noise);
  inst.problem.analytic = AnalyticOracle{[obj](const Vector& x) {
    const SolverSettings newton{1e-10, 50, SolverMethod::Newton};
    AnalyticPoint a;
    a.y_star = inner_solve(*obj, x, newton, 0.0).solution;
    a.z_star = obj->hess_yy_lower(x, a.y_star).ldlt().solve(obj->grad_y_upper(x, a.y_star));
    a.hypergrad = obj->grad_x_upper(x, a.y_star) - obj->cross_hvp_lower(x, a.y_star, a.z_star);
    return a;
  }};
  inst.problem.constants = derive_constants(c);
  return inst;
}

}  // namespace slipopt
