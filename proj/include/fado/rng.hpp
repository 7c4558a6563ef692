#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fado/mat.hpp"

namespace fado {

// Deterministic RNG. std::uniform_*_distribution output is
// implementation-defined, so the draws are derived from raw mt19937_64
// output directly; sequences are reproducible across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // uniform in [0, 1) with 53 bits of mantissa
  double next_double() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // uniform integer in [0, n), bias-free via rejection
  uint64_t below(uint64_t n) {
    if (n == 0) return 0;
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 eng_;
};

// Fisher-Yates with explicit draws; deterministic for a fixed seed.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, uint64_t seed) {
  Rng rng(seed);
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

inline void fill_uniform(Mat& m, Rng& rng, double lo, double hi) {
  for (auto& x : m.a) x = rng.uniform(lo, hi);
}

}  // namespace fado
