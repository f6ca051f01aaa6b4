#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A draw is a
// pure function of (key, counter), so paths can be generated in any order.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace qcheat {

class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Block operator()(Block ctr) const {
    std::array<std::uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, k);
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    return ctr;
  }

  /// Counter (a, a >> 32, b, c).
  Block operator()(std::uint64_t a, std::uint32_t b, std::uint32_t c) const {
    return (*this)(Block{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), b, c});
  }

 private:
  static Block single_round(const Block& c, const std::array<std::uint32_t, 2>& k) {
    const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
    const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
    return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
  }

  std::array<std::uint32_t, 2> key_;
};

/// Uniform in (0, 1), never 0 or 1.
inline double uniform_open(std::uint32_t u) { return (static_cast<double>(u) + 0.5) * 0x1p-32; }

/// Two standard normals from one block half (Box-Muller).
inline std::array<double, 2> box_muller(std::uint32_t a, std::uint32_t b) {
  const double r = std::sqrt(-2.0 * std::log(uniform_open(a)));
  const double th = 2.0 * std::numbers::pi * uniform_open(b);
  return {r * std::cos(th), r * std::sin(th)};
}

}  // namespace qcheat
