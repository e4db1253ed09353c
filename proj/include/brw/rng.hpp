#pragma once

// Deterministic, platform-independent RNG. std::uniform_real_distribution is
// not bit-stable across standard libraries, so the uniform mapping is done by
// hand. Streams are derived from (seed, module tag, replicate index) via
// splitmix64, giving independent substreams without coordination; the core
// generator is xoshiro256++.

#include <cstdint>
#include <cmath>

namespace brw {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Module tags keep replicate streams disjoint across operations that share a
// run seed. Values are part of the output contract (byte-identical runs).
enum class StreamTag : uint64_t {
  Generations = 1,
  MinDisplacement = 2,
  LevelMinima = 3,
  Trimming = 4,
  Sandwich = 5,
  FindPath = 6,
  InequalityAudit = 7,
  Zeta = 8,
  FunctionalEq = 9,
  LimitLaw = 10,
  Spectrum = 11,
  Survival = 12,
};

class Rng {
 public:
  Rng(uint64_t seed, StreamTag tag, uint64_t rep) {
    uint64_t h = seed;
    (void)splitmix64(h);
    h ^= 0x8000000000000000ULL | (static_cast<uint64_t>(tag) * 0xD2B74407B1CE6E93ULL);
    (void)splitmix64(h);
    h ^= rep * 0xCA5A826395121157ULL;
    for (auto& w : s_) w = splitmix64(h);
  }

  uint64_t next() {
    uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0,1): 53-bit mantissa.
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1]: never zero, safe under log().
  double u01_pos() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

  // log U with U uniform on (0,1]; in (-inf, 0].
  double log_u01() { return std::log(u01_pos()); }

  double exponential(double rate = 1.0) { return -std::log(u01_pos()) / rate; }

  // Uniform integer in [0, n) by rejection-free multiply-shift (n << 2^64).
  uint64_t below(uint64_t n) {
    // 128-bit multiply high
    __uint128_t m = static_cast<__uint128_t>(next()) * n;
    return static_cast<uint64_t>(m >> 64);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
};

}  // namespace brw
