#pragma once

#include <cstdint>

namespace uavrl {

// SplitMix64. One 64-bit word of state, so snapshots serialize trivially and
// replays are bit-exact across platforms.
class SplitMix64 {
 public:
  SplitMix64() = default;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1), 53 mantissa bits
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // unbiased draw in [0,n) (Lemire's bounded method)
  int uniform_int(int n) {
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * static_cast<std::uint64_t>(n);
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < static_cast<std::uint64_t>(n)) {
      std::uint64_t t = (-static_cast<std::uint64_t>(n)) % static_cast<std::uint64_t>(n);
      while (lo < t) {
        x = next();
        m = static_cast<__uint128_t>(x) * static_cast<std::uint64_t>(n);
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<int>(m >> 64);
  }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

  // derive an independent stream from (seed, index)
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    return g.next();
  }

 private:
  std::uint64_t state_ = 0;
};

}  // namespace uavrl
