#pragma once

// Counter-based random numbers (Philox4x32-10). Every draw is a pure function
// of (seed, stream, t, i), so results do not depend on call order, thread
// count or platform.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace l2disc {

/// Stream identifiers keep unrelated consumers of one seed independent.
enum class Stream : std::uint32_t {
  kWalkSigns = 1,
  kInstance = 2,
  kBaseline = 3,
  kConcentration = 4,
  kBench = 5,
  kShuffle = 6,
};

class CounterRng {
 public:
  using Block = std::array<std::uint32_t, 4>;

  constexpr explicit CounterRng(std::uint64_t seed = 0) : seed_(seed) {}

  constexpr std::uint64_t seed() const { return seed_; }

  Block block(Stream stream, std::uint64_t t, std::uint64_t i) const {
    Block ctr{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32) ^
                                                static_cast<std::uint32_t>(stream) << 16,
              static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32)};
    std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                     static_cast<std::uint32_t>(seed_ >> 32)};
    for (int round = 0; round < 10; ++round) {
      ctr = philox_round(ctr, key);
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }

  std::uint64_t bits(Stream stream, std::uint64_t t, std::uint64_t i) const {
    const Block b = block(stream, t, i);
    return (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
  }

  /// Uniform in [0, 1).
  double uniform(Stream stream, std::uint64_t t, std::uint64_t i) const {
    return static_cast<double>(bits(stream, t, i) >> 11) * 0x1.0p-53;
  }

  /// +1 or -1 with equal probability.
  double rademacher(Stream stream, std::uint64_t t, std::uint64_t i) const {
    return (block(stream, t, i)[0] & 1u) ? 1.0 : -1.0;
  }

  /// Standard normal via Box-Muller on one Philox block.
  double normal(Stream stream, std::uint64_t t, std::uint64_t i) const {
    const Block b = block(stream, t, i);
    const std::uint64_t w0 = (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
    const std::uint64_t w1 = (static_cast<std::uint64_t>(b[3]) << 32) | b[2];
    const double u1 = (static_cast<double>(w0 >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(w1 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static Block philox_round(const Block& ctr, const std::array<std::uint32_t, 2>& key) {
    constexpr std::uint64_t kM0 = 0xD2511F53u;
    constexpr std::uint64_t kM1 = 0xCD9E8D57u;
    const std::uint64_t p0 = kM0 * ctr[0];
    const std::uint64_t p1 = kM1 * ctr[2];
    return {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
  }

  std::uint64_t seed_;
};

}  // namespace l2disc
