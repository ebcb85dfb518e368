#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "slipopt/constants.hpp"
#include "slipopt/problem.hpp"
#include "slipopt/trace.hpp"

namespace slipopt {

/// Number of stochastic oracle evaluations of each kind.
struct OracleCounter {
  std::uint64_t n_grad_x_F = 0;
  std::uint64_t n_grad_y_F = 0;
  std::uint64_t n_grad_y_G = 0;
  std::uint64_t n_hvp_xy = 0;
  std::uint64_t n_hvp_yy = 0;

  std::uint64_t total() const { return n_grad_x_F + n_grad_y_F + n_grad_y_G + n_hvp_xy + n_hvp_yy; }
  friend bool operator==(const OracleCounter&, const OracleCounter&) = default;
};

/// Iterate tuple of the single-loop method.
struct SlipState {
  Vector x;
  Vector y;
  Vector z;
  Vector m;
  std::int64_t t = 0;
  OracleCounter calls;
};

/// Read-only view handed to the per-iteration callback after iteration `t`.
/// `before` holds (x_t, y_t, z_t, m_t); `after` holds the updated tuple.
struct IterationEvent {
  std::int64_t t;
  const SlipState& before;
  const SlipState& after;
  const Vector& estimate;  ///< hypergradient estimate consumed by the momentum update
  bool step_skipped;       ///< zero momentum, x left unchanged
};

using IterationHook = std::function<void(const IterationEvent&)>;

struct InitialPoint {
  Vector x0;
  Vector y0_init;
  Vector z0;
};

struct RunOptions {
  IterationHook hook;
  bool record_trace = true;
  /// Without an analytic oracle grad_norm is estimated by finite differences
  /// every `fd_every` iterations.
  std::int64_t fd_every = 50;
  /// Abort (status TimedOut) once the wall clock exceeds this; 0 disables.
  double max_wall_seconds = 0.0;
};

enum class RunStatus { Ok, Diverged, TimedOut };
std::string to_string(RunStatus status);

struct RunResult {
  SlipState state;
  Trace trace;
  RunStatus status = RunStatus::Ok;
  std::optional<std::int64_t> failed_at;  ///< iteration whose iterate became non-finite
  std::int64_t skipped_steps = 0;
  Vector warm_start_y;  ///< y_0 produced by the warm-start phase
};

/// Lower-level SGD with a (possibly moving) upper-level sequence.
struct SgdDdResult {
  Vector y;
  /// |y_t - y*(x_t)| for t = 0..N when an analytic oracle exists.
  std::vector<double> distances;
  bool step_exceeds_theory = false;  ///< alpha > 1 / (2 l_g1)
};

using UpperSequence = std::function<Vector(std::int64_t)>;

/// N steps y <- y - alpha grad_y G(x_t, y; pi_t) drawing stream PiTilde
/// counters counter_offset .. counter_offset + N - 1.
SgdDdResult sgd_dd(const BilevelProblem& problem, const UpperSequence& xs, const Vector& y0, double alpha,
                   std::int64_t N, std::uint64_t seed, std::uint64_t counter_offset = 0,
                   OracleCounter* calls = nullptr);
SgdDdResult sgd_dd(const BilevelProblem& problem, const Vector& x, const Vector& y0, double alpha, std::int64_t N,
                   std::uint64_t seed, std::uint64_t counter_offset = 0, OracleCounter* calls = nullptr);

/// z - gamma (grad_yy G(x,y;zeta) z - grad_y F(x,y;xi)).
Vector update_z(const StochasticOracle& oracle, const Vector& z, const Vector& x, const Vector& y, double gamma,
                const Sample& zeta, const Sample& xi);

/// Single-loop normalized-momentum method with lower-level warm start.
RunResult slip_run(const BilevelProblem& problem, const ParamSchedule& schedule, const InitialPoint& init,
                   std::uint64_t seed, const RunOptions& options = {});

/// Baseline: as slip_run with the unnormalized step x <- x - eta m.
RunResult masoba_run(const BilevelProblem& problem, const ParamSchedule& schedule, const InitialPoint& init,
                     std::uint64_t seed, const RunOptions& options = {});

struct DoubleLoopSettings {
  std::int64_t refine_interval = 2;  ///< I
  std::int64_t refine_steps = 3;     ///< K
};

/// Baseline: SLIP updates plus K extra lower-level SGD steps (frozen x) after
/// every I-th upper-level step.
RunResult double_loop_run(const BilevelProblem& problem, const ParamSchedule& schedule,
                          const DoubleLoopSettings& settings, const InitialPoint& init, std::uint64_t seed,
                          const RunOptions& options = {});

struct TtsaSettings {
  double eta_exponent = 0.6;
  double alpha_exponent = 0.4;
};

/// Baseline: two-timescale SGD. At iteration t (1-based) the upper step is
/// eta t^{-eta_exponent}, lower and linear-system steps alpha t^{-alpha_exponent}
/// and gamma t^{-alpha_exponent}; plain unnormalized x update, no momentum.
RunResult ttsa_run(const BilevelProblem& problem, const ParamSchedule& schedule, const TtsaSettings& settings,
                   const InitialPoint& init, std::uint64_t seed, const RunOptions& options = {});

/// Base step size times t^{-exponent}, t >= 1.
double ttsa_step(double base, double exponent, std::int64_t t);

}  // namespace slipopt
