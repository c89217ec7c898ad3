#pragma once

// Deterministic counter-based random streams.  Every Monte-Carlo replication
// draws from its own stream keyed by (seed, replication, tag), so results do
// not depend on scheduling order and identical configs reproduce bit-identical
// output.

#include <cmath>
#include <cstdint>

#include "levylan/common.hpp"

namespace levylan {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream tags; keeping them centralized documents which draws share entropy.
enum class StreamTag : uint64_t {
  ledger_count = 1,
  ledger_times = 2,
  ledger_sizes = 3,
  surrogate = 4,
  nuisance = 5,
  stable_increment = 6,
  bootstrap = 7,
  misc = 8,
};

struct Stream {
  uint64_t s0, s1;  // xoroshiro-ish state, seeded via splitmix

  static Stream keyed(uint64_t seed, uint64_t rep, StreamTag tag) {
    uint64_t k = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
    k = splitmix64(k ^ rep);
    k = splitmix64(k ^ (static_cast<uint64_t>(tag) << 32));
    Stream s;
    s.s0 = splitmix64(k);
    s.s1 = splitmix64(k ^ 0xda3e39cb94b95bdbULL);
    if (s.s0 == 0 && s.s1 == 0) s.s0 = 1;
    return s;
  }

  uint64_t next() {
    // xoroshiro128+
    uint64_t a = s0, b = s1;
    uint64_t r = a + b;
    b ^= a;
    s0 = ((a << 24) | (a >> 40)) ^ b ^ (b << 16);
    s1 = (b << 37) | (b >> 27);
    return r;
  }

  // uniform on (0,1); never returns 0 or 1
  double uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double exponential() { return -std::log(uniform()); }

  // Box-Muller, both variates used
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u = uniform(), v = uniform();
    double r = std::sqrt(-2.0 * std::log(u));
    double c = std::cos(2.0 * kPi * v), s = std::sin(2.0 * kPi * v);
    spare_ = r * s;
    have_spare_ = true;
    return r * c;
  }

  // Exact Poisson: multiplication method for small means, PTRS transformed
  // rejection (Hormann) for large ones.
  uint64_t poisson(double mean);

 private:
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline uint64_t Stream::poisson(double mean) {
  if (mean < 0 || !std::isfinite(mean)) throw config_error("poisson: bad mean");
  if (mean == 0) return 0;
  if (mean < 30.0) {
    double l = std::exp(-mean), p = 1.0;
    uint64_t k = 0;
    do {
      ++k;
      p *= uniform();
    } while (p > l);
    return k - 1;
  }
  // PTRS (Hormann 1993), exact for mean >= 10 or so
  const double b = 0.931 + 2.53 * std::sqrt(mean);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    double u = uniform() - 0.5;
    double v = uniform();
    double us = 0.5 - std::fabs(u);
    double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<uint64_t>(k);
    if (k < 0 || (us < 0.013 && v > us)) continue;
    double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
    double rhs = -mean + k * std::log(mean) - std::lgamma(k + 1.0);
    if (lhs <= rhs) return static_cast<uint64_t>(k);
  }
}

}  // namespace levylan
