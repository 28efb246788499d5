#pragma once

#include <cstdint>

namespace recaudit::rng {

// splitmix64; used both as a stream generator and to mix seeds.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  SplitMix64 s(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
  return s.next();
}

// Unbiased bound via rejection; avoids std::uniform_int_distribution so
// sampled sequences are identical on every standard library.
inline std::uint64_t uniform_below(SplitMix64& g, std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = g.next();
  } while (x >= limit);
  return x % n;
}

// Uniform double in [0, 1) with 53 bits of randomness.
inline double uniform01(SplitMix64& g) {
  return static_cast<double>(g.next() >> 11) * 0x1.0p-53;
}

}  // namespace recaudit::rng
