#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace fpl {

// All randomness in the project flows through the two generators below.
// Both are fully specified 64-bit integer recurrences, so streams are
// identical on every platform; no <random> distributions are used anywhere.

// splitmix64: seed expander and avalanche mixer (Steele, Lea, Flood 2014).
struct SplitMix64 {
  std::uint64_t s;

  std::uint64_t next() {
    std::uint64_t z = (s += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

// xoshiro256++ (Blackman, Vigna 2019).
class Xoshiro256pp {
 public:
  static Xoshiro256pp seeded(std::uint64_t seed) {
    SplitMix64 sm{seed};
    Xoshiro256pp g;
    for (auto& w : g.s_) w = sm.next();
    return g;
  }

  // Per-replica stream: the replica index is folded into the root seed with
  // an odd multiplier and then avalanched by splitmix64, so consecutive
  // replicas get statistically independent streams.
  static Xoshiro256pp replica_stream(std::uint64_t root_seed,
                                     std::uint64_t replica) {
    return seeded(root_seed ^ (0x9E3779B97F4A7C15ull * (replica + 1)));
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0,1) with 53 random bits.
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Exp(1) variate; u01() < 1 guarantees a finite value.
  double exp1() { return -std::log1p(-u01()); }

  // Uniform integer in [0,n), n >= 1, exact (rejection sampling).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace fpl
