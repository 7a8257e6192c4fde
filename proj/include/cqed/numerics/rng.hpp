#pragma once

// Counter-based splittable random stream. Identical (seed, stream_id) pairs
// reproduce identical sequences regardless of scheduling, so parallel sweep
// points stay deterministic. Output is platform-independent (no
// std::*_distribution).

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>

namespace cqed::numerics {

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id), counter_(0) {}

  // Derive an independent child stream; deterministic in (parent, id).
  RngStream split(std::uint64_t id) const {
    return RngStream(mix(seed_ ^ mix(stream_)), mix(stream_ * 0x9e3779b97f4a7c15ull + id + 1));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  std::uint64_t next_u64() {
    std::uint64_t x = seed_ + mix(stream_ ^ 0x6a09e667f3bcc909ull) + counter_ * 0x9e3779b97f4a7c15ull;
    ++counter_;
    return mix(x);
  }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (one value per call; pair cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Guard against log(0).
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Complex Gaussian with per-quadrature standard deviation sigma.
  std::complex<double> complex_normal(double sigma) {
    const double re = normal();
    const double im = normal();
    return {sigma * re, sigma * im};
  }

  double exponential(double rate) {
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -std::log(u) / rate;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Binomial by direct summation for small n, normal approximation otherwise.
  std::uint64_t binomial(std::uint64_t n, double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (n <= 64) {
      std::uint64_t k = 0;
      for (std::uint64_t i = 0; i < n; ++i) k += bernoulli(p) ? 1 : 0;
      return k;
    }
    const double mu = static_cast<double>(n) * p;
    const double sd = std::sqrt(mu * (1.0 - p));
    double x = std::round(mu + sd * normal());
    if (x < 0.0) x = 0.0;
    if (x > static_cast<double>(n)) x = static_cast<double>(n);
    return static_cast<std::uint64_t>(x);
  }

 private:
  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cqed::numerics
