#pragma once

#include <cstdint>
#include <random>

namespace smile {

// Stream seeds are derived by splitmix64 so that every (replication, cell,
// channel) tuple gets an independent generator. Chain streams never depend on
// policy decisions, which keeps channel trajectories identical across policies
// run from the same seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(base) ^ a) ^ b);
}

// mt19937_64 plus hand-rolled draws: the standard pins down the raw generator
// but not the <random> distributions, and runs must reproduce bit-exactly
// across toolchains.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // uniform in [0, 1) with 53 random mantissa bits
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // index distributed by the given nonnegative weights (need not be normalized)
  int categorical(const double* weights, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += weights[i];
    double u = uniform01() * total;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return n - 1;
  }

  // uniform integer in [0, n)
  int uniform_int(int n) {
    // rejection keeps the draw unbiased for any n
    const std::uint64_t span = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v = gen_();
    while (v >= limit) v = gen_();
    return static_cast<int>(v % span);
  }

private:
  std::mt19937_64 gen_;
};

}  // namespace smile
