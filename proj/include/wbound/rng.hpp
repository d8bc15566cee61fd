#pragma once

// Seeded random streams. A stream is identified by (master seed, index);
// the pair is hashed into a seed_seq so neighbouring indices decorrelate.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace wbound {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t index) : seed_(master_seed), index_(index) {
    std::uint64_t a = splitmix64(master_seed);
    std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t master_seed() const { return seed_; }
  std::uint64_t index() const { return index_; }

  /// Child stream, deterministic in (this stream, k).
  RngStream child(std::uint64_t k) const {
    return RngStream(splitmix64(seed_ ^ 0xa0761d6478bd642fULL) ^ index_, k);
  }

  std::mt19937_64& engine() { return engine_; }

  /// Uniform on [0,1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() { return normal_(engine_); }

  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::uint64_t> dist(mean);
    return dist(engine_);
  }

  /// Uniform point on the unit sphere in R^d.
  void unit_sphere(std::span<double> out) {
    double s = 0.0;
    do {
      s = 0.0;
      for (double& x : out) {
        x = normal();
        s += x * x;
      }
    } while (s == 0.0);
    s = std::sqrt(s);
    for (double& x : out) x /= s;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t index_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace wbound
