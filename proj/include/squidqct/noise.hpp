#pragma once

// Counter-based random numbers (Philox4x32-10). A draw depends only on
// (seed, kind, counter), so trajectories are reproducible regardless of the
// order in which an ensemble is scheduled.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace squidqct {

namespace detail {

inline void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

using PhiloxBlock = std::array<std::uint32_t, 4>;

inline PhiloxBlock philox4x32(PhiloxBlock ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    detail::mulhilo32(M0, ctr[0], hi0, lo0);
    detail::mulhilo32(M1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

/// Seed of the k-th member of an ensemble.
inline std::uint64_t split_seed(std::uint64_t base_seed, std::uint64_t k) {
  return detail::splitmix64(base_seed ^ detail::splitmix64(k + 0x632BE59BD9B4E019ULL));
}

enum class NoiseKind : std::uint32_t { qsd_wiener = 1, jumps_poisson = 2 };

class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, NoiseKind kind) : seed_(seed), kind_(kind) {}

  std::uint64_t seed() const { return seed_; }
  NoiseKind kind() const { return kind_; }
  std::uint64_t counter() const { return counter_; }

  PhiloxBlock next_block() {
    const PhiloxBlock ctr = {static_cast<std::uint32_t>(counter_),
                             static_cast<std::uint32_t>(counter_ >> 32),
                             static_cast<std::uint32_t>(kind_), 0u};
    ++counter_;
    return philox4x32(ctr, {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    const auto b = next_block();
    return to_unit(b[0], b[1]);
  }

  /// Complex Wiener increment with E[dxi dxi*] = dt and E[dxi^2] = 0: real and
  /// imaginary parts are independent N(0, dt/2) (Box-Muller on one block).
  std::complex<double> wiener(double dt) {
    const auto b = next_block();
    const double u1 = 1.0 - to_unit(b[0], b[1]);  // (0, 1]
    const double u2 = to_unit(b[2], b[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return std::sqrt(0.5 * dt) * std::complex<double>(r * std::cos(theta), r * std::sin(theta));
  }

 private:
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  std::uint64_t seed_;
  NoiseKind kind_;
  std::uint64_t counter_ = 0;
};

}  // namespace squidqct
