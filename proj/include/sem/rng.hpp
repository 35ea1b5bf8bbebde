#pragma once

// Counter-based random streams. A stream is a (key, counter) pair; the n-th
// draw is a pure function of both, so streams for different replications or
// animals can be derived statelessly and evaluated in any order.

#include <cmath>
#include <cstdint>
#include <limits>

namespace sem {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of replication `index` under `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master ^ mix64(index + 0x632be59bd9b4e019ULL));
}

__extension__ using uint128 = unsigned __int128;

class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(mix64(key)), counter_(counter) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  std::uint64_t counter() const noexcept { return counter_; }

  /// Uniform on the open interval (0, 1).
  double uniform01() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform on {0, ..., n-1}; Lemire's nearly-divisionless rejection.
  std::uint64_t uniform_index(std::uint64_t n) noexcept {
    uint128 m = static_cast<uint128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<uint128>((*this)()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) noexcept { return p >= 1.0 || uniform01() < p; }

  double exponential(double rate) noexcept { return -std::log(uniform01()) / rate; }

  /// Trials up to and including the first success, p in (0, 1].
  std::uint64_t geometric(double p) noexcept {
    if (p >= 1.0) return 1;
    const double g = std::floor(std::log(uniform01()) / std::log1p(-p));
    if (g >= 9.0e18) return std::numeric_limits<std::uint64_t>::max() / 2;
    return 1 + static_cast<std::uint64_t>(g);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace sem
