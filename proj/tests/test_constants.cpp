#include "doctest.h"

#include <cmath>
#include <limits>

#include "slipopt/constants.hpp"
#include "slipopt/rng.hpp"

using namespace slipopt;

namespace {

SmoothnessConstants unit_constants() {
  SmoothnessConstants c;
  c.mu = c.l_g1 = c.L0 = c.L1 = c.sigma_g1 = 1.0;
  return c;
}

ScheduleInputs unit_inputs(double eps) {
  ScheduleInputs in;
  in.eps = eps;
  in.delta = 0.1;
  in.Delta0 = in.Delta_y0 = in.Delta_z0 = 1.0;
  return in;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("derive_constants closed forms") {
  SmoothnessConstants c;
  c.mu = 1.0;
  c.L_x1 = 3.0;
  CHECK(derive_constants(c).L1 == doctest::Approx(3.0).epsilon(1e-15));

  c = {};
  c.mu = c.l_g1 = c.L_x1 = 1.0;
  CHECK(derive_constants(c).L1 == doctest::Approx(1.4142135623730951).epsilon(1e-15));

  c = {};
  c.mu = c.l_g1 = 1.0;
  c.L_y0 = 2.0;
  CHECK(derive_constants(c).l_zstar == doctest::Approx(2.8284271247461903).epsilon(1e-15));
}

TEST_CASE("derive_constants rejects mu = 0 and is idempotent") {
  SmoothnessConstants c;
  CHECK_THROWS_AS(derive_constants(c), std::invalid_argument);
  c.mu = 0.7;
  c.l_g1 = 2.0;
  c.l_g2 = 0.3;
  c.l_f0 = 1.1;
  c.L_x0 = 0.4;
  c.L_x1 = 0.9;
  c.L_y0 = 1.2;
  c.L_y1 = 0.2;
  const SmoothnessConstants once = derive_constants(c);
  const SmoothnessConstants twice = derive_constants(once);
  CHECK(once.L0 == twice.L0);
  CHECK(once.L1 == twice.L1);
  CHECK(once.l_zstar == twice.l_zstar);
}

TEST_CASE("L0 and L1 never decrease when a raw constant other than mu grows") {
  for (std::uint64_t k = 0; k < 200; ++k) {
    const CounterRng rng({Stream::Xi, k, 3}, 0);
    SmoothnessConstants c;
    c.mu = 0.1 + rng.uniform(0);
    double* fields[] = {&c.l_g1, &c.l_g2, &c.l_f0, &c.L_x0, &c.L_x1, &c.L_y0, &c.L_y1};
    for (std::size_t i = 0; i < 7; ++i) *fields[i] = 2.0 * rng.uniform(i + 1);
    const SmoothnessConstants base = derive_constants(c);
    const std::size_t which = static_cast<std::size_t>(rng.uniform(20) * 7.0);
    *fields[which] *= 1.0 + rng.uniform(21);
    const SmoothnessConstants bumped = derive_constants(c);
    CHECK(bumped.L0 >= base.L0);
    CHECK(bumped.L1 >= base.L1);
  }
}

TEST_CASE("warm_start_T0") {
  CHECK(warm_start_T0(0.25, 1.0, 1.0, 1.0) == 42);
  CHECK(warm_start_T0(0.25, 1.0, 1.0, 1.0 / 16.0) == 0);
  CHECK(warm_start_T0(0.25, 1.0, 1.0, 0.01) == 0);
  CHECK_THROWS_AS(warm_start_T0(2.0, 1.0, 1.0, 1.0), SchedulingError);
  CHECK_THROWS_AS(warm_start_T0(0.0, 1.0, 1.0, 1.0), SchedulingError);

  const double step = std::ceil(2.0 * std::log(2.0) / std::log(2.0 / 1.75));
  for (double d : {0.1, 0.3, 1.0, 7.0, 123.0}) {
    const auto diff = warm_start_T0(0.25, 1.0, 1.0, 2.0 * d) - warm_start_T0(0.25, 1.0, 1.0, d);
    CHECK((diff == step || diff == step - 1));
  }
}

TEST_CASE("theorem41 schedule at the unit constants matches independent evaluation") {
  const SmoothnessConstants c = unit_constants();
  const auto terms = ceiling_terms_theorem41(c, unit_inputs(1.0));
  double ceiling = std::numeric_limits<double>::infinity();
  for (const auto& t : terms) ceiling = std::min(ceiling, t.value);
  CHECK(ceiling == doctest::Approx(1.0).epsilon(1e-15));

  const ParamSchedule s = schedule_theorem41(c, unit_inputs(ceiling));
  CHECK(s.eps_ceiling == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::log(s.B) == doctest::Approx(71.434703539011588727).epsilon(1e-14));
  CHECK(rel(1.0 - s.beta, 2.9902092180031343057e-9) < 1e-7);
  CHECK(rel(s.eta, 7.0801012386749983252e-12) < 1e-7);
  CHECK(rel(static_cast<double>(s.T), 564963672857.0) < 1e-7);
  CHECK(s.alpha_init == doctest::Approx(1.4784819656450872707e-4).epsilon(1e-14));
  CHECK(s.T0 == 75009);
  CHECK(s.gamma * c.mu == doctest::Approx(1.0 - s.beta).epsilon(1e-15));
  CHECK(s.alpha == doctest::Approx(8.0 * s.gamma).epsilon(1e-15));
}

TEST_CASE("theorem42 uses gamma = 16 (1 - beta) / mu") {
  const SmoothnessConstants c = unit_constants();
  double ceiling = std::numeric_limits<double>::infinity();
  for (const auto& t : ceiling_terms_theorem42(c, unit_inputs(1.0))) ceiling = std::min(ceiling, t.value);
  const ParamSchedule s42 = schedule_theorem42(c, unit_inputs(0.5 * ceiling));
  const ParamSchedule s41 = schedule_theorem41(c, unit_inputs(0.5 * ceiling));
  CHECK(s42.gamma == doctest::Approx(16.0 * (1.0 - s42.beta) / c.mu).epsilon(1e-15));
  CHECK(s42.gamma == doctest::Approx(16.0 * s41.gamma).epsilon(1e-15));
  CHECK(s42.eta == s41.eta);
  CHECK(s42.alpha == s41.alpha);
  CHECK(s42.T0 == s41.T0);
  CHECK(s42.accuracy_factor > 1.0);
}

TEST_CASE("halving eps multiplies T by at least 8") {
  const SmoothnessConstants c = unit_constants();
  for (double eps : {0.9, 0.5, 0.2, 0.05}) {
    const ParamSchedule a = schedule_theorem41(c, unit_inputs(eps));
    const ParamSchedule b = schedule_theorem41(c, unit_inputs(eps / 2.0));
    CHECK(b.T_real / a.T_real >= 8.0);
  }
}

TEST_CASE("theorem schedules reject inadmissible inputs") {
  const SmoothnessConstants c = unit_constants();
  try {
    schedule_theorem41(c, unit_inputs(1.5));
    FAIL("expected SchedulingError");
  } catch (const SchedulingError& e) {
    CHECK(e.ceiling() == doctest::Approx(1.0));
    CHECK(!e.binding_term().empty());
  }
  SmoothnessConstants noiseless = c;
  noiseless.sigma_g1 = 0.0;
  CHECK_THROWS_WITH_AS(schedule_theorem41(noiseless, unit_inputs(0.5)), doctest::Contains("practical"), SchedulingError);
  CHECK_THROWS_AS(schedule_theorem42(noiseless, unit_inputs(0.5)), SchedulingError);
  ScheduleInputs bad = unit_inputs(0.5);
  bad.delta = 1.0;
  CHECK_THROWS_AS(schedule_theorem41(c, bad), SchedulingError);
}

TEST_CASE("oversized horizons saturate instead of overflowing") {
  const SmoothnessConstants c = unit_constants();
  const ParamSchedule s = schedule_theorem41(c, unit_inputs(1e-3));
  CHECK(s.T_saturated);
  CHECK(s.T == std::numeric_limits<std::int64_t>::max());
  CHECK(s.T_real > 9e18);
}

TEST_CASE("schedules are pure functions of their inputs") {
  const SmoothnessConstants c = unit_constants();
  const ParamSchedule a = schedule_theorem42(c, unit_inputs(0.3));
  const ParamSchedule b = schedule_theorem42(c, unit_inputs(0.3));
  CHECK(a.beta == b.beta);
  CHECK(a.eta == b.eta);
  CHECK(a.T == b.T);
  CHECK(a.A == b.A);
  CHECK(a.binding_term == b.binding_term);
}

TEST_CASE("practical schedule") {
  const ParamSchedule s =
      schedule_practical({{"beta", 0.9}, {"eta", 0.05}, {"alpha", 0.01}, {"gamma", 0.01}, {"T", 5000}, {"T0", 3}});
  CHECK(s.mode == ScheduleMode::Practical);
  CHECK(s.beta == 0.9);
  CHECK(s.eta == 0.05);
  CHECK(s.alpha == 0.01);
  CHECK(s.gamma == 0.01);
  CHECK(s.T == 5000);
  CHECK(s.T0 == 3);
  CHECK(s.alpha_init == 0.01);

  CHECK_THROWS_AS(
      schedule_practical({{"beta", 1.0}, {"eta", 0.05}, {"alpha", 0.01}, {"gamma", 0.01}, {"T", 5000}, {"T0", 3}}),
      SchedulingError);
  CHECK_THROWS_AS(
      schedule_practical({{"beta", 0.9}, {"eta", 0.0}, {"alpha", 0.01}, {"gamma", 0.01}, {"T", 5000}, {"T0", 3}}),
      SchedulingError);
  CHECK_THROWS_AS(schedule_practical({{"beta", 0.9}, {"eta", 0.05}, {"alpha", 0.01}, {"gamma", 0.01}, {"T", 5000}}),
                  SchedulingError);
  CHECK_THROWS_AS(
      schedule_practical({{"beta", 0.9}, {"eta", 0.05}, {"alpha", 0.01}, {"gamma", 0.01}, {"T", 50.5}, {"T0", 3}}),
      SchedulingError);
  CHECK_THROWS_AS(schedule_practical({{"beta", 0.9}, {"eta", 0.05}, {"alpha", 0.01}, {"gamma", 0.01}, {"T", 5},
                                      {"T0", 3}, {"lr", 1.0}}),
                  SchedulingError);
}

TEST_CASE("schedule mode names round-trip") {
  for (ScheduleMode m : {ScheduleMode::Theorem41, ScheduleMode::Theorem42, ScheduleMode::Practical}) {
    CHECK(parse_schedule_mode(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_schedule_mode("thm"), std::invalid_argument);
}
