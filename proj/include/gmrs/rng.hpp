#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace gmrs {

// Philox4x32-10 counter-based generator.  Stateless: each 128-bit counter and
// 64-bit key pair maps to four independent 32-bit words, so draws can be
// addressed by (seed, coordinates) and are identical regardless of the order
// in which they are requested.
struct Philox4x32 {
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;  // golden-ratio increment
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;  // sqrt(3)-1 increment
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }
};

// Uniform double in (0, 1] from two 32-bit words (53-bit mantissa).
inline double uniform_open_closed(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t u = (static_cast<std::uint64_t>(a) << 32) | b;
  return 1.0 - static_cast<double>(u >> 11) * 0x1.0p-53;
}

// Two independent standard normal draws addressed by (seed, id0, id1, id2).
// Box-Muller on one Philox block.
inline std::array<double, 2> normal_pair(std::uint64_t seed, std::uint32_t id0, std::uint32_t id1,
                                         std::uint32_t id2) {
  const auto words = Philox4x32::block(
      {id0, id1, id2, 0u},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  const double u1 = uniform_open_closed(words[0], words[1]);
  const double u2 = uniform_open_closed(words[2], words[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(t), r * std::sin(t)};
}

// Uniform double in [0, 1) addressed by (seed, id0, id1, id2).
inline double uniform_at(std::uint64_t seed, std::uint32_t id0, std::uint32_t id1,
                         std::uint32_t id2) {
  const auto words = Philox4x32::block(
      {id0, id1, id2, 1u},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  return 1.0 - uniform_open_closed(words[0], words[1]);
}

}  // namespace gmrs
