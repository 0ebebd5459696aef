#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sdaas {

// Seeded RNG with portable bounded draws. std::mt19937_64 output is fully
// specified by the standard; the distribution helpers below avoid
// std::uniform_*_distribution whose streams differ across stdlibs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(eng_() % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  double gaussian(double mean, double stddev) {
    // Box-Muller, one value per call.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    return mean + stddev * z;
  }

  // Derive an independent stream, e.g. per request or per drone.
  Rng fork(std::uint64_t salt) const {
    std::uint64_t s = (seed_ + 0x9e3779b97f4a7c15ull) ^ (salt * 0xbf58476d1ce4e5b9ull + 0x94d049bb133111ebull);
    return Rng(s == 0 ? 1 : s);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace sdaas
