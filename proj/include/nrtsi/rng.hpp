#pragma once
#include <cstdint>
#include <cmath>

namespace nrtsi {

// Counter-free PRNG with platform-stable streams. All randomness in the
// library flows through this so that identical seeds give bit-identical
// corpora, checkpoints and samples on any build.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    // splitmix64 expansion of the seed into xoshiro256++ state
    uint64_t z = seed;
    for (auto& si : s_) {
      z += 0x9e3779b97f4a7c15ull;
      uint64_t w = z;
      w = (w ^ (w >> 30)) * 0xbf58476d1ce4e5b9ull;
      w = (w ^ (w >> 27)) * 0x94d049bb133111ebull;
      si = w ^ (w >> 31);
    }
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform on [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  uint64_t below(uint64_t n) {
    // rejection to avoid modulo bias
    const uint64_t lim = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do { x = next_u64(); } while (x >= lim);
    return x % n;
  }

  // standard normal via Box-Muller (fresh pair each call keeps streams simple)
  double gauss() {
    double u1, u2;
    do { u1 = uniform(); } while (u1 <= 0.0);
    u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
};

// Deterministic seed derivation for independent sub-streams.
inline uint64_t derive_seed(uint64_t seed, uint64_t tag) {
  uint64_t z = seed ^ (0x9e3779b97f4a7c15ull * (tag + 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  return derive_seed(derive_seed(derive_seed(seed, a), b), c);
}

}  // namespace nrtsi
