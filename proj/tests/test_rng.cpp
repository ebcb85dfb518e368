#include "doctest.h"

#include <cmath>
#include <set>

#include "slipopt/rng.hpp"

using namespace slipopt;

TEST_CASE("philox4x32-10 known-answer vectors") {
  using Block = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("draws are pure functions of sample, channel and index") {
  const Sample s{Stream::Zeta, 17, 99};
  const CounterRng a(s, 2), b(s, 2);
  for (std::uint64_t i = 0; i < 64; ++i) {
    CHECK(a.normal(i) == b.normal(i));
    CHECK(a.uniform(i) == b.uniform(i));
  }
  CHECK(CounterRng(s, 3).normal(0) != a.normal(0));
  CHECK(CounterRng({Stream::ZetaPrime, 17, 99}, 2).normal(0) != a.normal(0));
  CHECK(CounterRng({Stream::Zeta, 18, 99}, 2).normal(0) != a.normal(0));
  CHECK(CounterRng({Stream::Zeta, 17, 100}, 2).normal(0) != a.normal(0));
}

TEST_CASE("uniform stays in the open unit interval and normal has unit moments") {
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const CounterRng rng({Stream::Pi, static_cast<std::uint64_t>(k), 5}, 0);
    const double u = rng.uniform(0);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    const double z = rng.normal(1);
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sq / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("stream names and sub-seeds") {
  CHECK(stream_name(Stream::PiTilde) == "pi_tilde");
  CHECK(stream_name(Stream::XiPrime) == "xi_prime");
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(mix64(i));
  CHECK(seen.size() == 1000);
}
