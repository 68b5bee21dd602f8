#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace lanegraph {

// Deterministic random source. All distributions are implemented here on top
// of the raw 64-bit stream so results are identical across standard library
// implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed), seed_hash_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive integer range.
  int uniform_int(int lo, int hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(eng_() % span);
  }

  // Box-Muller, trigonometric form. One fresh sample per call.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  int poisson(double lambda) {
    // Knuth's method; lambdas here are small (< 10).
    double limit = std::exp(-lambda);
    int k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

  // SplitMix64-style hash for deriving independent child seeds.
  static uint64_t derive(uint64_t seed, uint64_t tag) {
    uint64_t x = seed + 0x9e3779b97f4a7c15ull * (tag + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  // Independent child stream, e.g. one per minimap. Children with distinct
  // tags never share state with the parent or each other.
  Rng fork(uint64_t tag) const { return Rng(derive(seed_hash_, tag)); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = eng_() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  uint64_t seed_hash_ = 0;
};

}  // namespace lanegraph
