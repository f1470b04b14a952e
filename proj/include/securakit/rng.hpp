#pragma once

#include <cstdint>
#include <limits>

namespace securakit {

/**
 * Counter-based random stream addressed by (seed, stream index).
 *
 * The k-th draw is splitmix64(key + k * golden_gamma), with the key derived
 * from both the seed and the stream index. Any trial can therefore be
 * replayed on its own, and the values a trial sees do not depend on which
 * thread runs it or in which order trials are scheduled.
 */
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    ++counter_;
    return mix(key_ + counter_ * kGamma);
  }

  /// Uniform on (0, 1], 53-bit resolution.
  double uniform_open_closed() {
    return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
  }

  std::uint64_t draws() const { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace securakit
