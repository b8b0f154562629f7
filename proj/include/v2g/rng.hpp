#pragma once
// Deterministic random streams and scalar samplers.
//
// mt19937_64 gives a portable, standardized sequence; the scalar samplers
// are written out explicitly (no std::*_distribution) so that results are
// identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <random>

namespace v2g {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent substream keyed by up to three indices. Streams derived from
  // the same (seed, keys) are identical, which is what the common-random-number
  // sweeps rely on.
  static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
    return Rng(splitmix64(seed ^ splitmix64(a ^ splitmix64(b ^ splitmix64(c)))));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(uniform01() * (hi - lo + 1));
  }

  double normal(double mean, double sd) {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    double u2 = uniform01();
    double z = std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925287 * u2);
    return mean + sd * z;
  }

  double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

  // Rejection from the parent normal; exact for the truncated law.
  double truncated_normal(double mean, double sd, double lo, double hi) {
    for (;;) {
      double x = normal(mean, sd);
      if (x >= lo && x <= hi) return x;
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace v2g
