#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

#include "blockpred/digest.hpp"

namespace blockpred {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded generator with named sub-streams.
//
// The engine is std::mt19937_64; the real-valued transforms below are written
// out so that the produced sequences do not depend on the standard library's
// distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  // Independent stream keyed by (seed, name, index).
  static Rng derive(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
    Fnv1a h;
    h.add(seed);
    h.add(name);
    h.add(index);
    return Rng(h.value());
  }

  Rng split(std::string_view name, std::uint64_t index = 0) { return derive(next(), name, index); }

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; both uniforms are consumed on every call.
  double normal(double mean = 0.0, double sd = 1.0) {
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential(double rate) { return -std::log(1.0 - uniform()) / rate; }

private:
  std::mt19937_64 engine_;
};

} // namespace blockpred
