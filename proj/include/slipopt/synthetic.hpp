#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "slipopt/problem.hpp"

namespace slipopt {

/// g(x,y) = 1/2 y'Ay - y'(Bx + c),  f(x,y) = 1/2 |y - e|^2 + r/2 |x|^2.
/// Closed forms: y* = A^{-1}(Bx + c), z* = A^{-1}(y* - e), grad Phi = r x + B'z*.
struct QuadraticSpec {
  Matrix A;
  Matrix B;
  Vector c;
  Vector e;
  double r = 0.0;

  /// l_f0 is reported as the sup of |y*(x) - e| over [-box_radius, box_radius]^{d_x}
  /// unless an explicit bound is supplied.
  double box_radius = 5.0;
  std::optional<double> l_f0;
  /// Relaxed-smoothness slopes. Any positive value is valid for a quadratic
  /// upper level; they only enter the theorem constants.
  double L_x1 = 1.0;
  double L_y1 = 1.0;
};

/// A = 2I, B = I, c = 0, e = (1,1), r = 1. Minimizer x* = (0.4, 0.4).
QuadraticSpec q2_spec();

/// Random well-conditioned instance (eigenvalues of A in [0.5, 0.5 + O(1)]).
QuadraticSpec random_quadratic_spec(int dim_x, int dim_y, std::uint64_t seed);

/// Throws ConfigError when A is not symmetric positive definite (the message
/// lists its eigenvalues) or the shapes disagree.
BilevelProblem make_quadratic(const QuadraticSpec& spec, NoiseModel noise = {});

/// Upper level sum_i (cosh(a x_i) - 1) + 1/2 |y - e|^2 over the quadratic
/// lower level of `core` (core.r is unused).
struct UnboundedSmoothSpec {
  double a = 1.0;
  QuadraticSpec core;
};

/// Evaluations with |x|_inf > 700 / a throw std::range_error.
BilevelProblem make_unbounded_smooth(const UnboundedSmoothSpec& spec, NoiseModel noise = {});

/// Synthetic data hyper-cleaning: one weight x_i per training sample,
/// lower level (1/n) sum sigma(x_i) logloss(b_i a_i'y) + lambda |y|^2,
/// upper level mean validation logloss.
struct HypercleanSpec {
  int n_train = 200;
  int n_val = 200;
  int feature_dim = 10;
  double corruption = 0.2;  ///< fraction p of flipped training labels
  double lambda = 0.1;
  std::uint64_t seed = 7;
};

struct HypercleanData {
  Matrix train_features;  ///< n_train x feature_dim
  Vector train_labels;    ///< +-1, after corruption
  Matrix val_features;
  Vector val_labels;
  std::vector<int> corrupted;  ///< sorted indices of flipped training labels
};

struct HypercleanInstance {
  BilevelProblem problem;
  std::shared_ptr<const HypercleanData> data;
  /// Uniform initial weight 1.0 per sample.
  Vector initial_weights() const;
};

/// Flips exactly floor(p * n_train) labels chosen by a seeded shuffle. The
/// analytic oracle solves the lower level by Newton's method to 1e-10.
HypercleanInstance make_hyperclean(const HypercleanSpec& spec, NoiseModel noise = {});

double logistic(double v);

}  // namespace slipopt
