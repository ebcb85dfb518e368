#include "doctest.h"

#include <cmath>
#include <thread>

#include "slipopt/problem.hpp"
#include "slipopt/synthetic.hpp"

using namespace slipopt;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

const Sample kXiPrime{Stream::XiPrime, 0, 1};
const Sample kZetaPrime{Stream::ZetaPrime, 0, 1};

}  // namespace

TEST_CASE("hypergrad_estimate on noiseless Q2") {
  const BilevelProblem p = make_quadratic(q2_spec());
  const Vector x = Vector::Zero(2);

  SUBCASE("at the lower-level optimum") {
    const Vector g = hypergrad_estimate(x, Vector::Zero(2), vec2(-0.5, -0.5), kXiPrime, kZetaPrime, p.oracle);
    CHECK(g[0] == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(g[1] == doctest::Approx(-0.5).epsilon(1e-15));
  }
  SUBCASE("z = 0 leaves the upper-level gradient") {
    const Vector y = vec2(0.3, -1.2);
    const Vector x1 = vec2(0.7, 0.1);
    const Vector g = hypergrad_estimate(x1, y, Vector::Zero(2), kXiPrime, kZetaPrime, p.oracle);
    CHECK((g - p.oracle.grad_x_F(x1, y, kXiPrime)).norm() == 0.0);
  }
  SUBCASE("away from the optimum the two oracle terms combine") {
    const Vector y = vec2(1.0, 1.0);
    const Vector z = vec2(-0.5, -0.5);
    const Vector gx = p.oracle.grad_x_F(x, y, kXiPrime);
    const Vector cross = p.oracle.hvp_xy_G(x, y, z, kZetaPrime);
    CHECK(gx.norm() == 0.0);
    CHECK(cross[0] == doctest::Approx(0.5));
    const Vector g = hypergrad_estimate(x, y, z, kXiPrime, kZetaPrime, p.oracle);
    CHECK(g[0] == doctest::Approx(-0.5));
    CHECK(g[1] == doctest::Approx(-0.5));
  }
}

TEST_CASE("dimension mismatch is a configuration error") {
  const BilevelProblem p = make_quadratic(q2_spec());
  CHECK_THROWS_AS(hypergrad_estimate(Vector::Zero(3), Vector::Zero(2), Vector::Zero(2), kXiPrime, kZetaPrime, p.oracle),
                  ConfigError);
  CHECK_THROWS_AS(hypergrad_estimate(Vector::Zero(2), Vector::Zero(1), Vector::Zero(2), kXiPrime, kZetaPrime, p.oracle),
                  ConfigError);
  CHECK_THROWS_AS(p.oracle.hvp_yy_G(Vector::Zero(2), Vector::Zero(2), Vector::Zero(4), kZetaPrime), ConfigError);
}

TEST_CASE("consistency at the optimum on every shipped instance") {
  const BilevelProblem problems[] = {make_quadratic(q2_spec()), make_quadratic(random_quadratic_spec(3, 4, 11)),
                                     make_unbounded_smooth({1.0, q2_spec()}), make_hyperclean({}).problem};
  for (const BilevelProblem& p : problems) {
    for (int k = 0; k < 5; ++k) {
      const Vector x = Vector::Constant(p.dim_x(), 0.3 * k - 0.6);
      const AnalyticPoint a = p.analytic->evaluate(x);
      const Vector g = hypergrad_estimate(x, a.y_star, a.z_star, kXiPrime, kZetaPrime, p.oracle);
      CHECK((g - a.hypergrad).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("oracles are pure, also across threads") {
  const BilevelProblem p = make_quadratic(random_quadratic_spec(3, 4, 2), NoiseModel::gaussian(0.2, 0.3, 0.4));
  const Vector x = Vector::LinSpaced(3, -1.0, 1.0);
  const Vector y = Vector::LinSpaced(4, 0.5, 2.0);
  const Vector z = Vector::Ones(4);
  const Sample s{Stream::Zeta, 12, 34};
  const Vector a = p.oracle.hvp_yy_G(x, y, z, s);
  Vector b;
  std::thread([&] { b = p.oracle.hvp_yy_G(x, y, z, s); }).join();
  CHECK((a - b).norm() == 0.0);
  CHECK((p.oracle.grad_y_G(x, y, s) - p.oracle.grad_y_G(x, y, s)).norm() == 0.0);
  CHECK((p.oracle.grad_y_G(x, y, s) - p.oracle.grad_y_G(x, y, {Stream::Zeta, 13, 34})).norm() > 0.0);
}

TEST_CASE("empirical unbiasedness") {
  const Vector x = vec2(0.2, -0.4);
  const Vector y = vec2(1.0, 0.5);
  SUBCASE("noiseless") {
    const UnbiasednessReport r = empirical_unbiasedness_check(make_quadratic(q2_spec()), x, y, 100, 1);
    CHECK(r.max_deviation_in_sigmas == 0.0);
  }
  SUBCASE("gaussian sigma 0.1, n = 10000") {
    const UnbiasednessReport r =
        empirical_unbiasedness_check(make_quadratic(q2_spec(), NoiseModel::gaussian(0.1, 0.1, 0.1)), x, y, 10000, 2024);
    CHECK(r.pass());
    CHECK(r.max_deviation_in_sigmas == doctest::Approx(1.208).epsilon(1e-3));
  }
  SUBCASE("zero-variance gaussian with few draws") {
    const UnbiasednessReport r =
        empirical_unbiasedness_check(make_quadratic(q2_spec(), NoiseModel::gaussian(0, 0, 0)), x, y, 10, 3);
    CHECK(r.max_deviation_in_sigmas == 0.0);
  }
  SUBCASE("too few draws for a noisy model") {
    CHECK_THROWS_AS(
        empirical_unbiasedness_check(make_quadratic(q2_spec(), NoiseModel::gaussian(0.1, 0.1, 0.1)), x, y, 10, 3),
        ConfigError);
  }
}

TEST_CASE("gaussian noise second moment matches the declared sigma") {
  const NoiseModel noise = NoiseModel::gaussian(0.3, 0.2, 0.5);
  const BilevelProblem p = make_quadratic(random_quadratic_spec(2, 3, 4), noise);
  const Objective& obj = p.oracle.objective();
  const Vector x = vec2(0.1, 0.2);
  const Vector y = Vector::Constant(3, 0.4);
  const Vector z = Vector::Constant(3, 2.0);
  const int n = 20000;
  double f1 = 0.0, g1 = 0.0, g2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Sample s{Stream::Pi, static_cast<std::uint64_t>(i), 8};
    f1 += (p.oracle.grad_y_F(x, y, s) - obj.grad_y_upper(x, y)).squaredNorm();
    g1 += (p.oracle.grad_y_G(x, y, s) - obj.grad_y_lower(x, y)).squaredNorm();
    g2 += (p.oracle.hvp_yy_G(x, y, z, s) - obj.hvp_yy_lower(x, y, z)).squaredNorm();
  }
  CHECK(f1 / n == doctest::Approx(0.09).epsilon(0.05));
  CHECK(g1 / n == doctest::Approx(0.04).epsilon(0.05));
  CHECK(g2 / n == doctest::Approx(0.25 * z.squaredNorm()).epsilon(0.05));
}

TEST_CASE("bounded noise respects its bounds on every draw") {
  const NoiseModel noise = NoiseModel::bounded(0.1, 0.2, 0.3, 0.4);
  const BilevelProblem p = make_quadratic(random_quadratic_spec(3, 2, 9), noise);
  const Objective& obj = p.oracle.objective();
  const Vector x = Vector::Constant(3, 0.5);
  const Vector y = vec2(-1.0, 2.0);
  const Vector z = vec2(1.5, -0.5);
  for (int i = 0; i < 2000; ++i) {
    const Sample s{Stream::Zeta, static_cast<std::uint64_t>(i), 77};
    CHECK((p.oracle.grad_x_F(x, y, s) - obj.grad_x_upper(x, y)).norm() <= 0.1 * (1 + 1e-12));
    CHECK((p.oracle.grad_y_F(x, y, s) - obj.grad_y_upper(x, y)).norm() <= 0.1 * (1 + 1e-12));
    CHECK((p.oracle.hvp_xy_G(x, y, z, s) - obj.cross_hvp_lower(x, y, z)).norm() <= 0.3 * z.norm() * (1 + 1e-12));
    CHECK((p.oracle.hvp_yy_G(x, y, z, s) - obj.hvp_yy_lower(x, y, z)).norm() <= 0.4 * (1 + 1e-12));
  }
}

TEST_CASE("strong convexity probe") {
  const BilevelProblem q = make_quadratic(random_quadratic_spec(3, 4, 11));
  CHECK(strong_convexity_probe(q, q.constants.mu, 1000, 5).violations == 0);
  CHECK(strong_convexity_probe(q, 1.5 * q.constants.l_g1, 1000, 5).violations > 0);
  const BilevelProblem h = make_hyperclean({}).problem;
  CHECK(strong_convexity_probe(h, h.constants.mu, 1000, 6).violations == 0);
}
