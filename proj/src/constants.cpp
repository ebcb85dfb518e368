#include "slipopt/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace slipopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kE = std::numbers::e;

// a / b with a zero denominator meaning "no constraint".
double ratio(double a, double b) { return b == 0.0 ? kInf : a / b; }

double sqr(double v) { return v * v; }

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw SchedulingError(std::string("schedule: ") + name + " must be positive and finite, got " + fmt_double(v));
  }
}

// Shared pieces of both theorem ceilings.
struct CeilingPieces {
  double drift_scale;   // e l_g1 Delta0 L0 / (mu delta)
  double noise_scale;   // e l_g1 Delta0 L0^3 sigma_g1^2 / (mu^3 delta)
  double locality;      // sqrt(2 (1 + l_g1^2/mu^2)(L_x1^2 + L_y1^2))
  double upper_noise;   // sqrt(sigma_f1^2 + 2 l_f0^2 sigma_g2^2 / mu^2)
};

CeilingPieces pieces(const SmoothnessConstants& c, const ScheduleInputs& in) {
  CeilingPieces p{};
  p.drift_scale = kE * c.l_g1 * in.Delta0 * c.L0 / (c.mu * in.delta);
  p.noise_scale = kE * c.l_g1 * in.Delta0 * std::pow(c.L0, 3) * sqr(c.sigma_g1) / (std::pow(c.mu, 3) * in.delta);
  p.locality = std::sqrt(2.0 * (1.0 + sqr(c.l_g1 / c.mu)) * (sqr(c.L_x1) + sqr(c.L_y1)));
  p.upper_noise = std::sqrt(sqr(c.sigma_f1) + 2.0 * sqr(c.l_f0) * sqr(c.sigma_g2) / sqr(c.mu));
  return p;
}

double exp_damped_sqrt(double drift_scale, double exponent) {
  return std::sqrt(32.0 * drift_scale / std::exp(exponent));
}

double noise_tail_term(const SmoothnessConstants& c, const CeilingPieces& p) {
  const double base = std::pow(std::pow(2.0, 21) * p.noise_scale, 0.25);
  const double damp = c.sigma_g1 == 0.0 ? 0.0 : std::exp(-c.l_g1 * p.upper_noise / (512.0 * c.L0 * c.sigma_g1));
  return base * damp;
}

void check_inputs(const SmoothnessConstants& c, const ScheduleInputs& in) {
  if (!(c.mu > 0.0)) throw SchedulingError("schedule: mu must be positive");
  if (!(in.delta > 0.0 && in.delta < 1.0)) throw SchedulingError("schedule: delta must lie in (0,1)");
  if (!(in.eps > 0.0)) throw SchedulingError("schedule: eps must be positive");
  require_positive(c.l_g1, "l_g1");
  require_positive(c.L0, "L0 (call derive_constants first)");
  require_positive(c.L1, "L1 (call derive_constants first)");
  require_positive(in.Delta0, "Delta0");
  if (in.Delta_y0 < 0.0 || in.Delta_z0 < 0.0) throw SchedulingError("schedule: initial distances must be non-negative");
  if (c.sigma_g1 == 0.0) {
    throw SchedulingError(
        "schedule: sigma_g1 = 0 makes the theorem step sizes degenerate (division by zero); "
        "use the practical schedule mode for noiseless problems");
  }
}

const CeilingTerm& binding(const std::vector<CeilingTerm>& terms) {
  return *std::min_element(terms.begin(), terms.end(),
                           [](const CeilingTerm& a, const CeilingTerm& b) { return a.value < b.value; });
}

// Steps common to both theorem schedules. `eps` is the accuracy entering the
// step-size formulas.
ParamSchedule theorem_core(const SmoothnessConstants& c, const ScheduleInputs& in,
                           std::vector<CeilingTerm> terms, ScheduleMode mode) {
  const CeilingTerm& bind = binding(terms);
  if (in.eps > bind.value) {
    throw SchedulingError("schedule: eps = " + fmt_double(in.eps) + " exceeds the admissible ceiling " +
                              fmt_double(bind.value) + " (binding term: " + bind.name + ")",
                          bind.value, bind.name);
  }

  ParamSchedule s;
  s.mode = mode;
  s.eps = in.eps;
  s.delta = in.delta;
  s.Delta0 = in.Delta0;
  s.Delta_y0 = in.Delta_y0;
  s.Delta_z0 = in.Delta_z0;
  s.eps_ceiling = bind.value;
  s.binding_term = bind.name;
  s.ceiling_terms = std::move(terms);

  const double eps = in.eps;
  const double sg1sq = sqr(c.sigma_g1);
  s.alpha_init = theorem_alpha_init(c, in.delta);

  s.B = std::pow(std::pow(2.0, 21) * kE * c.l_g1 * in.Delta0 * std::pow(c.L0, 3) * sg1sq /
                     (std::pow(c.mu, 3) * in.delta * std::pow(eps, 4)),
                 4);
  const double logB = std::log(s.B);
  if (!(logB > 0.0) || !std::isfinite(logB)) {
    throw SchedulingError("schedule: log(B) = " + fmt_double(logB) + " is not a positive finite number");
  }
  const double raw_gap = sqr(c.mu) * sqr(eps) / (64.0 * 1024.0 * sqr(c.L0) * sg1sq * sqr(logB));
  if (!(raw_gap > 0.0 && raw_gap <= 1.0)) {
    throw SchedulingError("schedule: 1 - beta = " + fmt_double(raw_gap) + " outside (0, 1]");
  }
  s.beta = 1.0 - raw_gap;
  // Re-derive from the stored beta so 1 - beta is exact for every consumer.
  const double one_minus_beta = 1.0 - s.beta;
  if (!(one_minus_beta > 0.0)) {
    throw SchedulingError("schedule: 1 - beta = " + fmt_double(raw_gap) + " underflows double precision");
  }

  s.A = sqr(32.0 * kE * c.l_g1 * in.Delta0 * c.L0 / (c.mu * in.delta * sqr(eps) * one_minus_beta));
  const double logA = std::log(s.A);
  if (!(logA > 0.0) || !std::isfinite(logA)) {
    throw SchedulingError("schedule: log(A) = " + fmt_double(logA) + " is not a positive finite number");
  }
  s.eta = c.mu * eps * one_minus_beta / (8.0 * c.l_g1 * c.L0 * logA);
  s.gamma = (mode == ScheduleMode::Theorem42 ? 16.0 : 1.0) * one_minus_beta / c.mu;
  s.alpha = 8.0 * one_minus_beta / c.mu;

  s.T_real = 4.0 * in.Delta0 / (s.eta * eps);
  if (s.T_real < 9.0e18) {
    s.T = static_cast<std::int64_t>(std::ceil(s.T_real));
  } else {
    s.T = std::numeric_limits<std::int64_t>::max();
    s.T_saturated = true;
  }
  s.T0 = warm_start_T0(s.alpha_init, c.mu, c.L1, in.warm_start_distance.value_or(in.Delta_y0));
  return s;
}

}  // namespace

SmoothnessConstants derive_constants(SmoothnessConstants c) {
  if (!(c.mu > 0.0)) {
    throw std::invalid_argument("derive_constants: mu must be positive (it divides every derived constant), got " +
                                fmt_double(c.mu));
  }
  const double kappa = c.l_g1 / c.mu;
  const double scale = std::sqrt(1.0 + kappa * kappa);
  const double upper_y = c.L_y0 + c.L_y1 * c.l_f0;
  c.L0 = scale * (c.L_x0 + c.L_x1 * c.l_g1 * c.l_f0 / c.mu + kappa * upper_y +
                  c.l_f0 * (c.l_g1 * c.l_g2 + c.l_g2 * c.mu) / (c.mu * c.mu));
  c.L1 = scale * c.L_x1;
  c.l_zstar = scale * (c.l_g2 * c.l_f0 / (c.mu * c.mu) + upper_y / c.mu);
  return c;
}

double theorem_alpha_init(const SmoothnessConstants& c, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw SchedulingError("theorem_alpha_init: delta must lie in (0,1)");
  return std::min(1.0 / (2.0 * c.l_g1), c.mu / (2048.0 * sqr(c.L1) * sqr(c.sigma_g1) * std::log(kE / delta)));
}

std::string to_string(ScheduleMode mode) {
  switch (mode) {
    case ScheduleMode::Theorem41: return "theorem41";
    case ScheduleMode::Theorem42: return "theorem42";
    case ScheduleMode::Practical: return "practical";
  }
  return "unknown";
}

ScheduleMode parse_schedule_mode(const std::string& text) {
  if (text == "theorem41") return ScheduleMode::Theorem41;
  if (text == "theorem42") return ScheduleMode::Theorem42;
  if (text == "practical") return ScheduleMode::Practical;
  throw std::invalid_argument("unknown schedule mode '" + text + "' (expected practical, theorem41 or theorem42)");
}

void validate_schedule(const ParamSchedule& s) {
  if (!(s.beta >= 0.0 && s.beta < 1.0)) throw SchedulingError("schedule: beta must lie in [0,1), got " + fmt_double(s.beta));
  require_positive(s.alpha, "alpha");
  require_positive(s.gamma, "gamma");
  require_positive(s.eta, "eta");
  require_positive(s.alpha_init, "alpha_init");
  if (s.T < 1) throw SchedulingError("schedule: T must be a positive integer");
  if (s.T0 < 0) throw SchedulingError("schedule: T0 must be non-negative");
}

std::int64_t warm_start_T0(double alpha_init, double mu, double L1, double dist0) {
  const double contraction = mu * alpha_init;
  if (!(contraction > 0.0)) throw SchedulingError("warm_start_T0: mu * alpha_init must be positive");
  if (contraction >= 2.0) {
    throw SchedulingError("warm_start_T0: mu * alpha_init = " + fmt_double(contraction) + " must be below 2");
  }
  if (dist0 < 0.0) throw SchedulingError("warm_start_T0: initial distance must be non-negative");
  const double target = 256.0 * L1 * L1 * dist0 * dist0;
  if (!(target > 1.0)) return 0;
  const double steps = std::log(target) / std::log(2.0 / (2.0 - contraction));
  return static_cast<std::int64_t>(std::ceil(steps));
}

std::vector<CeilingTerm> ceiling_terms_theorem41(const SmoothnessConstants& c, const ScheduleInputs& in) {
  const CeilingPieces p = pieces(c, in);
  std::vector<CeilingTerm> t;
  t.push_back({"L0/L1", ratio(c.L0, c.L1)});
  t.push_back({"Delta_y0*L0", in.Delta_y0 * c.L0});
  t.push_back({"8*l_g1*L0/(mu*locality)", ratio(8.0 * c.l_g1 * c.L0, c.mu * p.locality)});
  t.push_back({"sqrt(16*drift)", std::sqrt(16.0 * p.drift_scale)});
  t.push_back({"4*noise^(1/4)", 4.0 * std::pow(p.noise_scale, 0.25)});
  t.push_back({"sqrt(32*drift/exp(mu/(2*l_g1)))", exp_damped_sqrt(p.drift_scale, c.mu / (2.0 * c.l_g1))});
  t.push_back({"sqrt(32*drift/exp(z0 term))",
               exp_damped_sqrt(p.drift_scale, c.mu * c.l_g1 * in.Delta_z0 / (2.0 * in.Delta0 * c.L0))});
  t.push_back({"sqrt(32*drift/exp(y0 term))",
               exp_damped_sqrt(p.drift_scale, c.mu * in.Delta_y0 * in.Delta_y0 * c.L0 / (2.0 * c.l_g1 * in.Delta0))});
  t.push_back({"Delta0*L0/|grad Phi(x0)|",
               in.grad_phi0_norm ? ratio(in.Delta0 * c.L0, *in.grad_phi0_norm) : kInf});
  t.push_back({"L0*sigma_g1/sigma_g2", ratio(c.L0 * c.sigma_g1, c.sigma_g2)});
  t.push_back({"L0*sigma_g1/sqrt(mu*l_g1)", ratio(c.L0 * c.sigma_g1, std::sqrt(c.mu * c.l_g1))});
  t.push_back({"noise tail", noise_tail_term(c, p)});
  return t;
}

std::vector<CeilingTerm> ceiling_terms_theorem42(const SmoothnessConstants& c, const ScheduleInputs& in) {
  const CeilingPieces p = pieces(c, in);
  const double sg1sq = sqr(c.sigma_g1);
  const double sigma_bar = c.sigma_z + c.sigma_f1;
  const double E = std::max({ratio(4.0 * sqr(sigma_bar), sg1sq),
                             ratio(sqr(c.l_g2 * c.l_f0), 8.0 * sqr(c.mu) * sg1sq * sqr(c.L1)),
                             ratio(sqr(c.L0), 16.0 * sg1sq * sqr(c.L1))});
  std::vector<CeilingTerm> t;
  t.push_back({"L0/L1", ratio(c.L0, c.L1)});
  t.push_back({"Delta_y0*L0", in.Delta_y0 * c.L0});
  t.push_back({"64*l_g1*Delta_z0*L0/sqrt(4*E*l_g1^2+l_zstar^2)",
               ratio(64.0 * c.l_g1 * in.Delta_z0 * c.L0, std::sqrt(4.0 * E * sqr(c.l_g1) + sqr(c.l_zstar)))});
  t.push_back({"8*l_g1*L0/(mu*locality)", ratio(8.0 * c.l_g1 * c.L0, c.mu * p.locality)});
  t.push_back({"sqrt(16*drift)", std::sqrt(16.0 * p.drift_scale)});
  t.push_back({"4*noise^(1/4)", 4.0 * std::pow(p.noise_scale, 0.25)});
  t.push_back({"sigma_g1*L0*L1/l_g2", ratio(c.sigma_g1 * c.L0 * c.L1, c.l_g2)});
  t.push_back({"sqrt(32*drift/exp(mu/(2*l_g1)))", exp_damped_sqrt(p.drift_scale, c.mu / (2.0 * c.l_g1))});
  t.push_back({"sqrt(32*drift/exp(z0 term))",
               exp_damped_sqrt(p.drift_scale, c.mu * c.l_g1 * in.Delta_z0 / (2.0 * in.Delta0 * c.L0))});
  t.push_back({"sqrt(32*drift/exp(y0 term))",
               exp_damped_sqrt(p.drift_scale, c.mu * in.Delta_y0 * in.Delta_y0 * c.L0 / (2.0 * c.l_g1 * in.Delta0))});
  t.push_back({"Delta0/Delta_z0", ratio(in.Delta0, in.Delta_z0)});
  t.push_back({"Delta0*L0/|grad Phi(x0)|",
               in.grad_phi0_norm ? ratio(in.Delta0 * c.L0, *in.grad_phi0_norm) : kInf});
  t.push_back({"L0*sigma_g1/sigma_g2", ratio(c.L0 * c.sigma_g1, c.sigma_g2)});
  t.push_back({"L0*sigma_g1/sqrt(mu*l_g1)", ratio(c.L0 * c.sigma_g1, std::sqrt(c.mu * c.l_g1))});
  t.push_back({"noise tail", noise_tail_term(c, p)});
  return t;
}

ParamSchedule schedule_theorem41(const SmoothnessConstants& c, const ScheduleInputs& in) {
  check_inputs(c, in);
  return theorem_core(c, in, ceiling_terms_theorem41(c, in), ScheduleMode::Theorem41);
}

ParamSchedule schedule_theorem42(const SmoothnessConstants& c, const ScheduleInputs& in) {
  check_inputs(c, in);
  ParamSchedule s = theorem_core(c, in, ceiling_terms_theorem42(c, in), ScheduleMode::Theorem42);
  const double sigma_bar = c.sigma_z + c.sigma_f1;
  const double sg1sq = sqr(c.sigma_g1);
  const double E = std::max({4.0 * sqr(sigma_bar) / sg1sq,
                             sqr(c.l_g2 * c.l_f0) / (8.0 * sqr(c.mu) * sg1sq * sqr(c.L1)),
                             sqr(c.L0) / (16.0 * sg1sq * sqr(c.L1))});
  s.accuracy_factor = c.mu / (16.0 * c.sigma_g1 * c.L0) *
                          (c.sigma_f1 + c.l_f0 * c.sigma_g2 / c.mu + 2.0 * c.sigma_g2 * in.Delta_z0) +
                      (1.0 + std::sqrt(E + sqr(c.l_zstar) / (4.0 * sqr(c.l_g1)))) * c.l_g1 / (8.0 * c.L0) + 13.0 / 8.0;
  return s;
}

ParamSchedule schedule_practical(const std::map<std::string, double>& cfg) {
  static const char* const kKeys[] = {"alpha", "beta", "gamma", "eta", "T", "T0", "alpha_init"};
  for (const auto& [key, value] : cfg) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw SchedulingError("schedule: unknown practical-mode key '" + key + "'");
    }
  }
  auto need = [&](const char* key) {
    auto it = cfg.find(key);
    if (it == cfg.end()) throw SchedulingError(std::string("schedule: practical mode requires '") + key + "'");
    return it->second;
  };
  auto whole = [&](const char* key) {
    const double v = need(key);
    if (v != std::floor(v) || !std::isfinite(v)) {
      throw SchedulingError(std::string("schedule: '") + key + "' must be an integer, got " + fmt_double(v));
    }
    return static_cast<std::int64_t>(v);
  };

  ParamSchedule s;
  s.mode = ScheduleMode::Practical;
  s.alpha = need("alpha");
  s.beta = need("beta");
  s.gamma = need("gamma");
  s.eta = need("eta");
  s.T = whole("T");
  s.T0 = whole("T0");
  auto ai = cfg.find("alpha_init");
  s.alpha_init = ai == cfg.end() ? s.alpha : ai->second;
  validate_schedule(s);
  return s;
}

}  // namespace slipopt
