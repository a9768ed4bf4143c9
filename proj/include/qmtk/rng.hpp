#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

// Splittable deterministic generator. Each (seed, stream) pair yields an
// independent sequence, so shots can be sampled in any order or in parallel
// without changing the output.

namespace qmtk {

class SplitRng {
 public:
  explicit SplitRng(std::uint64_t state) : state_(state) {}

  static std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static SplitRng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return SplitRng(mix64(seed ^ mix64(a ^ mix64(b))));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // standard normal, Box-Muller (one value per call)
  double gaussian() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    return mean < 10.0 ? poisson_knuth(mean) : poisson_ptrd(mean);
  }

 private:
  std::uint64_t poisson_knuth(double mean) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double p = uniform();
    while (p > limit) {
      ++k;
      p *= uniform();
    }
    return k;
  }

  // Hoermann's PTRD transformed-rejection sampler for mean >= 10.
  std::uint64_t poisson_ptrd(double mean) {
    const double smu = std::sqrt(mean);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      double v = uniform();
      double u;
      if (v <= 0.86 * vr) {
        u = v / vr - 0.43;
        return static_cast<std::uint64_t>(
            std::floor((2.0 * a / (0.5 - std::abs(u)) + b) * u + mean + 0.445));
      }
      if (v >= vr) {
        u = uniform() - 0.5;
      } else {
        u = v / vr - 0.93;
        u = (u < 0 ? -0.5 : 0.5) - u;
        v = uniform() * vr;
      }
      const double us = 0.5 - std::abs(u);
      if (us < 0.013 && v > us) continue;
      const double k = std::floor((2.0 * a / us + b) * u + mean + 0.445);
      v = v * inv_alpha / (a / (us * us) + b);
      if (k < 0) continue;
      if (std::log(v) <= k * std::log(mean) - mean - std::lgamma(k + 1.0))
        return static_cast<std::uint64_t>(k);
    }
  }

  std::uint64_t state_;
};

}  // namespace qmtk
