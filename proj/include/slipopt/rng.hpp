#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace slipopt {

/// Independent sample streams drawn by the bilevel algorithms. The upper-level
/// streams (Xi, XiPrime) and lower-level streams (Pi, Zeta, ZetaPrime) are
/// consumed by the main loop; PiTilde feeds the lower-level warm start and
/// any extra lower-level refinement passes.
enum class Stream : std::uint8_t { Xi = 0, XiPrime = 1, Pi = 2, Zeta = 3, ZetaPrime = 4, PiTilde = 5 };

std::string_view stream_name(Stream s);

/// One stochastic sample. Every pseudo-random number an oracle uses is a pure
/// function of (seed, stream, counter), so identical samples reproduce
/// identical oracle outputs on any thread.
struct Sample {
  Stream stream = Stream::Xi;
  std::uint64_t counter = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-mode normal and uniform draws addressed by (sample, channel, index).
/// `channel` separates oracles that might share a sample.
class CounterRng {
 public:
  CounterRng(const Sample& sample, std::uint32_t channel);

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform(std::uint64_t index) const;
  /// Standard normal via Box-Muller; indices 2k and 2k+1 share one block.
  double normal(std::uint64_t index) const;

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t block_index) const;

  std::array<std::uint32_t, 2> key_{};
  std::uint64_t counter_ = 0;
  std::uint32_t channel_ = 0;
};

/// SplitMix64 finalizer; used to derive sub-seeds deterministically.
std::uint64_t mix64(std::uint64_t v);

}  // namespace slipopt
