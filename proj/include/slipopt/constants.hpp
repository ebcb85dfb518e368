#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace slipopt {

/// Raised when a schedule cannot be built from its inputs: an inadmissible
/// accuracy, a degenerate noise level, or an out-of-range step size.
class SchedulingError : public std::runtime_error {
 public:
  explicit SchedulingError(const std::string& what, double ceiling = 0.0, std::string binding_term = {})
      : std::runtime_error(what), ceiling_(ceiling), binding_term_(std::move(binding_term)) {}

  /// Largest admissible accuracy (only meaningful for ceiling violations).
  double ceiling() const { return ceiling_; }
  const std::string& binding_term() const { return binding_term_; }

 private:
  double ceiling_;
  std::string binding_term_;
};

/// Regularity constants of a bilevel instance. The first twelve fields are
/// declared by the instance; L0, L1 and l_zstar are filled by derive_constants.
struct SmoothnessConstants {
  double mu = 0.0;    ///< strong convexity of g(x, .)
  double l_g1 = 0.0;  ///< gradient Lipschitz constant of g
  double l_g2 = 0.0;  ///< Hessian Lipschitz constant of g
  double l_f0 = 0.0;  ///< bound on |grad_y f(x, y*(x))|
  double L_x0 = 0.0;
  double L_x1 = 0.0;
  double L_y0 = 0.0;
  double L_y1 = 0.0;
  double sigma_f1 = 0.0;
  double sigma_g1 = 0.0;
  double sigma_g2 = 0.0;
  double sigma_z = 0.0;

  double L0 = 0.0;
  double L1 = 0.0;
  double l_zstar = 0.0;
};

/// Fills L0, L1 and l_zstar from the raw constants. Idempotent.
/// Throws std::invalid_argument when mu <= 0.
SmoothnessConstants derive_constants(SmoothnessConstants raw);

enum class ScheduleMode { Theorem41, Theorem42, Practical };

std::string to_string(ScheduleMode mode);
ScheduleMode parse_schedule_mode(const std::string& text);

/// One term of the accuracy ceiling, kept for diagnostics.
struct CeilingTerm {
  std::string name;
  double value = 0.0;
};

/// Everything the algorithms need to run, plus the theorem-mode diagnostics.
struct ParamSchedule {
  ScheduleMode mode = ScheduleMode::Practical;
  double alpha_init = 0.0;
  std::int64_t T0 = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
  std::int64_t T = 0;

  // Theorem-mode diagnostics; zero in practical mode.
  double eps = 0.0;
  double delta = 0.0;
  double A = 0.0;
  double B = 0.0;
  double Delta0 = 0.0;
  double Delta_y0 = 0.0;
  double Delta_z0 = 0.0;
  double T_real = 0.0;        ///< 4 Delta0 / (eta eps) before rounding
  bool T_saturated = false;   ///< T_real exceeds int64; T holds INT64_MAX and the schedule is not runnable
  double eps_ceiling = 0.0;
  std::string binding_term;   ///< ceiling term attaining the minimum
  std::vector<CeilingTerm> ceiling_terms;
  double accuracy_factor = 1.0;  ///< G of the high-probability analysis (Theorem42 only)
};

/// Warm-start step min{1/(2 l_g1), mu/(2048 L1^2 sigma_g1^2 log(e/delta))};
/// the second term is inactive when sigma_g1 = 0.
double theorem_alpha_init(const SmoothnessConstants& c, double delta);

/// Validates the relational invariants shared by every mode.
void validate_schedule(const ParamSchedule& s);

/// Warm-start length: ceil(log(256 L1^2 dist0^2) / log(2 / (2 - mu alpha_init))),
/// clamped below at zero.
std::int64_t warm_start_T0(double alpha_init, double mu, double L1, double dist0);

/// Instance quantities the theorem schedules depend on besides the constants.
struct ScheduleInputs {
  double eps = 0.0;
  double delta = 0.0;
  double Delta0 = 0.0;    ///< Phi(x0) - inf Phi
  double Delta_y0 = 0.0;  ///< |y0 - y*(x0)|
  double Delta_z0 = 0.0;  ///< |z0 - z*(x0)|
  /// |grad Phi(x0)|; the corresponding ceiling term is inactive when absent.
  std::optional<double> grad_phi0_norm;
  /// Distance used by the warm-start length; defaults to Delta_y0.
  std::optional<double> warm_start_distance;
};

/// Evaluates every accuracy-ceiling term of the in-expectation schedule.
std::vector<CeilingTerm> ceiling_terms_theorem41(const SmoothnessConstants& c, const ScheduleInputs& in);
/// Same for the high-probability schedule (adds the z-tracking terms).
std::vector<CeilingTerm> ceiling_terms_theorem42(const SmoothnessConstants& c, const ScheduleInputs& in);

ParamSchedule schedule_theorem41(const SmoothnessConstants& c, const ScheduleInputs& in);
ParamSchedule schedule_theorem42(const SmoothnessConstants& c, const ScheduleInputs& in);

/// Pass-through schedule with range validation. Recognized keys:
/// alpha, beta, gamma, eta, T, T0 (required) and alpha_init (defaults to alpha).
ParamSchedule schedule_practical(const std::map<std::string, double>& cfg);

}  // namespace slipopt
