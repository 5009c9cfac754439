#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>

#include "subcov/types.hpp"

namespace subcov {

/// Philox4x64-10 counter-based random generator.
///
/// Streams are identified by a 128-bit key, so every (seed, sweep point,
/// trial) tuple gets an independent, order-free stream and results do not
/// depend on execution order or thread count. The counter is advanced before
/// each block, matching the reference implementation used to generate the
/// known-answer vectors in the tests.
class Philox {
 public:
  Philox(std::uint64_t key0, std::uint64_t key1) : key_{key0, key1} {}

  std::uint64_t next_u64() {
    if (index_ == 4) {
      advance_counter();
      block_ = compute_block();
      index_ = 0;
    }
    return block_[index_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  /// Polar Box-Muller; u1 is shifted into (0, 1] so log never sees zero.
  std::complex<double> next_complex_gaussian(double variance) {
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = next_double();
    const double r = std::sqrt(-variance * std::log(u1));
    return std::polar(r, 2.0 * pi * u2);
  }

 private:
  static constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
  static constexpr std::uint64_t kMult1 = 0xCA5A826395121157ULL;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

  static void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
  }

  void advance_counter() {
    for (int i = 0; i < 4; ++i) {
      if (++counter_[i] != 0) break;  // propagate carry
    }
  }

  std::array<std::uint64_t, 4> compute_block() const {
    std::array<std::uint64_t, 4> c = counter_;
    std::uint64_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      std::uint64_t hi0, lo0, hi1, lo1;
      mulhilo(kMult0, c[0], hi0, lo0);
      mulhilo(kMult1, c[2], hi1, lo1);
      c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return c;
  }

  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_{};  // pre-incremented before each block
  std::array<std::uint64_t, 4> block_{};
  int index_ = 4;
};

/// Stream for one Monte Carlo trial: key = (master seed, sweep/trial id).
inline Philox trial_stream(std::uint64_t seed, std::uint32_t sweep_index, std::uint32_t trial) {
  return Philox(seed, (static_cast<std::uint64_t>(sweep_index) << 32) | trial);
}

}  // namespace subcov
