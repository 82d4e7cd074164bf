#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

#include "snlb/grid.hpp"

namespace snlb {

/// Philox4x32-10 (Salmon et al. 2011). Pure function of (key, counter), so
/// draws do not depend on evaluation order or thread count.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter c, Key k) {
    for (int r = 0; r < 10; ++r) {
      c = round(c, k);
      k[0] += kW0;
      k[1] += kW1;
    }
    return c;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;

  static Counter round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Purpose tags keep independent uses of one seed apart.
enum class Purpose : std::uint32_t {
  convolution = 1,
  initial_position = 2,
  initial_velocity = 3,
  ou_velocity = 4,
  damped_high = 5,
  proposal = 6,
  accept = 7,
  test_field = 8,
  generic = 9,
};

/// Keyed Gaussian source. A draw is identified by (seed, mode, step, path,
/// purpose, slot) and is the same whenever and wherever it is requested.
class KeyedNormal {
 public:
  KeyedNormal() = default;
  explicit KeyedNormal(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  static std::uint32_t pack_mode(const Wavevector& n) {
    std::uint32_t w = 0;
    for (int i = 0; i < kMaxDim; ++i) w = (w << 8) | static_cast<std::uint32_t>((n[i] + 128) & 0xFF);
    return w;
  }

  /// Two independent N(0,1) values.
  std::array<double, 2> normal_pair(std::uint32_t mode_word, std::uint64_t step, std::uint32_t path,
                                    Purpose purpose, std::uint32_t slot) const {
    const auto r = Philox4x32::generate(counter(mode_word, step, path, purpose, slot), key_);
    const double u1 = to_unit_open(r[0], r[1]);  // (0, 1]
    const double u2 = to_unit_open(r[2], r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
  }

  /// Uniform on (0, 1].
  double uniform(std::uint32_t mode_word, std::uint64_t step, std::uint32_t path, Purpose purpose,
                 std::uint32_t slot) const {
    const auto r = Philox4x32::generate(counter(mode_word, step, path, purpose, slot), key_);
    return to_unit_open(r[0], r[1]);
  }

  /// Standard complex Gaussian (E|z|^2 = 1) for mode n; conj(draw(-n)) when
  /// n is not the canonical member of {n, -n}; real N(0,1) at n = 0.
  std::complex<double> complex_normal(const Wavevector& n, int dim, std::uint64_t step, std::uint32_t path,
                                      Purpose purpose, std::uint32_t slot) const {
    if (is_zero(n)) return {normal_pair(pack_mode(n), step, path, purpose, slot)[0], 0.0};
    const bool canon = is_canonical(n, dim);
    const auto g = normal_pair(pack_mode(canon ? n : negate(n)), step, path, purpose, slot);
    const std::complex<double> z{g[0] * (0.5 * std::numbers::sqrt2), g[1] * (0.5 * std::numbers::sqrt2)};
    return canon ? z : std::conj(z);
  }

 private:
  static Philox4x32::Counter counter(std::uint32_t mode_word, std::uint64_t step, std::uint32_t path, Purpose purpose,
                                     std::uint32_t slot) {
    const auto lo = static_cast<std::uint32_t>(step);
    const auto hi = static_cast<std::uint32_t>(step >> 32);
    return {mode_word, lo ^ (hi * 0x9E3779B9u), path, (slot << 16) | static_cast<std::uint32_t>(purpose)};
  }

  static double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
    return (static_cast<double>(bits & ((1ull << 53) - 1)) + 1.0) * 0x1.0p-53;
  }

  Philox4x32::Key key_{0, 0};
};

}  // namespace snlb
