#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slipopt/algorithms.hpp"
#include "slipopt/constants.hpp"
#include "slipopt/problem.hpp"

namespace slipopt {

enum class SolverMethod { GradientDescent, Newton, ConjugateGradient };

struct SolverSettings {
  double tol = 1e-10;  ///< gradient-norm (inner solve) or residual (linear system) threshold
  int max_iters = 200;
  SolverMethod method = SolverMethod::Newton;
};

/// Raised when a deterministic solver stops before reaching its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

struct SolveResult {
  Vector solution;
  double residual = 0.0;  ///< final gradient norm or linear-system residual
  int iterations = 0;
};

/// Matrix-free conjugate gradient for symmetric positive-definite operators.
SolveResult conjugate_gradient(const std::function<Vector(const Vector&)>& apply, const Vector& rhs,
                               const Vector& start, double tol, int max_iters);

/// Minimizes g(x, .) to |grad_y g| <= tol. `step` is the gradient-descent step
/// (ignored by the other methods); `start` defaults to zero.
SolveResult inner_solve(const Objective& objective, const Vector& x, const SolverSettings& settings, double step,
                        const Vector* start = nullptr);

/// High-precision y*(x). Uses 1/l_g1 as the gradient-descent step.
Vector inner_solve_exact(const BilevelProblem& problem, const Vector& x, const SolverSettings& settings = {});

/// Solves grad_yy g(x,y) z = grad_y f(x,y) to residual <= tol. Direct
/// factorization for d_y <= 64 (or method Newton); conjugate gradient otherwise.
SolveResult solve_linear_system(const Objective& objective, const Vector& x, const Vector& y,
                                const SolverSettings& settings, double step = 0.0);

Vector solve_linear_system_exact(const BilevelProblem& problem, const Vector& x, const Vector& y,
                                 const SolverSettings& settings = {SolverSettings{1e-10, 500, SolverMethod::ConjugateGradient}});

/// Central differences of Phi(x) = f(x, inner_solve_exact(x)). Requires
/// settings.tol <= h^2.
Vector finite_diff_hypergrad(const BilevelProblem& problem, const Vector& x, double h = 1e-5,
                             const SolverSettings& settings = {SolverSettings{1e-11, 200, SolverMethod::Newton}});

/// Two-sided binomial allowance used by the ensemble checkers:
/// delta + 2 sqrt(delta (1 - delta) / n).
double violation_allowance(double delta, std::int64_t n);

struct WarmStartReport {
  std::int64_t seeds = 0;
  std::int64_t violations = 0;
  double violation_rate = 0.0;
  double allowance = 0.0;
  double threshold = 0.0;      ///< 1 / (8 sqrt(2) L1)
  double worst_distance = 0.0;
  bool pass = false;
};

/// Runs the warm-start phase (fixed x0, T0 steps) for n_seeds seeds and
/// counts how often |y_T0 - y*(x0)| exceeds 1 / (8 sqrt(2) L1).
WarmStartReport check_warm_start(const BilevelProblem& problem, double alpha_init, std::int64_t T0, double L1,
                                 std::int64_t n_seeds, double delta, const Vector& x0, const Vector& y0_init,
                                 std::uint64_t base_seed = 1);

/// Per-iteration quantities entering the hypergradient bias inequality.
struct BiasObservation {
  double lhs = 0.0;  ///< |estimate - grad Phi(x_t)|
  double y_err = 0.0;
  double z_err = 0.0;
  double grad_norm = 0.0;
};

struct BiasReport {
  std::int64_t rows = 0;
  double max_ratio = 0.0;  ///< max LHS / RHS
  std::int64_t worst_row = -1;
  bool pass = false;
};

/// Right-hand side L_x1 |dy| |grad Phi| + (L_x0 + L_x1 l_g1 l_f0/mu + l_g2 l_f0/mu) |dy| + l_g1 z_scale |dz|.
double bias_bound(const SmoothnessConstants& c, const BiasObservation& o, double z_scale = 1.0);

/// Checks the bias inequality pointwise. The estimate equals its conditional
/// expectation only for noiseless oracles; noisy problems are rejected.
BiasReport check_bias_decomposition(const BilevelProblem& problem, const std::vector<BiasObservation>& rows,
                                    double z_scale = 1.0);

/// Runs slip_run and collects one BiasObservation per iteration.
std::vector<BiasObservation> collect_bias_observations(const BilevelProblem& problem, const ParamSchedule& schedule,
                                                       const InitialPoint& init, std::uint64_t seed);

}  // namespace slipopt
