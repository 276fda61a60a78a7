#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace superres {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Stateless: every output block is a pure function of (counter, key), so
/// streams for frame r or bootstrap replicate k can be produced in any order
/// on any thread.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9U;
        key[1] += 0xBB67AE85U;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53U} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57U} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

/// Keyed view over Philox with 64-bit stream coordinates.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  constexpr Philox4x32::Counter block(std::uint64_t a, std::uint32_t b,
                                      std::uint32_t c) const noexcept {
    return Philox4x32::generate(
        {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), b, c}, key_);
  }

  /// Uniform in the open interval (0, 1) from two 32-bit words (52 bits,
  /// offset by half a step so neither endpoint is reachable).
  static constexpr double open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
  }

  /// Uniform integer in [0, n) (multiply-shift; bias < n / 2^32).
  static constexpr std::uint32_t below(std::uint32_t word, std::uint32_t n) noexcept {
    return static_cast<std::uint32_t>((std::uint64_t{word} * n) >> 32);
  }

 private:
  Philox4x32::Key key_;
};

/// Circular complex Gaussian with E|a|^2 = variance, via Box-Muller on one
/// Philox block.
struct ComplexNormal {
  double re;
  double im;
};

inline ComplexNormal complex_normal(const Philox4x32::Counter& block, double variance) noexcept {
  const double u1 = CounterRng::open_unit(block[0], block[1]);
  const double u2 = CounterRng::open_unit(block[2], block[3]);
  const double radius = std::sqrt(-variance * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace superres
