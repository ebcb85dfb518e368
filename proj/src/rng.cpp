#include "slipopt/rng.hpp"

#include <cmath>
#include <numbers>

namespace slipopt {

std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::Xi: return "xi";
    case Stream::XiPrime: return "xi_prime";
    case Stream::Pi: return "pi";
    case Stream::Zeta: return "zeta";
    case Stream::ZetaPrime: return "zeta_prime";
    case Stream::PiTilde: return "pi_tilde";
  }
  return "unknown";
}

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  // (bits + 0.5) / 2^53 never hits 0 or 1.
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::uint64_t mix64(std::uint64_t v) {
  v += 0x9E3779B97F4A7C15ull;
  v = (v ^ (v >> 30)) * 0xBF58476D1CE4E5B9ull;
  v = (v ^ (v >> 27)) * 0x94D049BB133111EBull;
  return v ^ (v >> 31);
}

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

CounterRng::CounterRng(const Sample& sample, std::uint32_t channel)
    : counter_(sample.counter), channel_(channel) {
  const std::uint64_t k = mix64(sample.seed ^ (0xA24BAED4963EE407ull * (static_cast<std::uint64_t>(sample.stream) + 1)));
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

std::array<std::uint32_t, 4> CounterRng::block(std::uint64_t block_index) const {
  // Block index is limited to 24 bits; the channel occupies the top byte.
  const std::uint32_t word3 = (channel_ << 24) | static_cast<std::uint32_t>(block_index & 0xFFFFFFu);
  return philox4x32({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                     static_cast<std::uint32_t>(block_index >> 24), word3},
                    key_);
}

double CounterRng::uniform(std::uint64_t index) const {
  const auto b = block(index >> 1);
  return (index & 1u) ? to_open_unit(b[2], b[3]) : to_open_unit(b[0], b[1]);
}

double CounterRng::normal(std::uint64_t index) const {
  const auto b = block(index >> 1);
  const double u1 = to_open_unit(b[0], b[1]);
  const double u2 = to_open_unit(b[2], b[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (index & 1u) ? radius * std::sin(angle) : radius * std::cos(angle);
}

}  // namespace slipopt
