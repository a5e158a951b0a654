#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace hcea {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed from a master seed and a (family, scenario, chain) tag. Adding a
/// new tag combination never changes the seeds of existing ones.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view family,
                                 std::string_view scenario, std::uint64_t chain) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ fnv1a(family));
  h = splitmix64(h ^ fnv1a(scenario));
  return splitmix64(h ^ (chain + 1));
}

namespace draw {

inline double uniform01(Rng& rng) {
  // 53 random bits, strictly inside (0, 1).
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double normal(Rng& rng, double mean, double sd) {
  std::normal_distribution<double> dist(mean, sd);
  return dist(rng);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// log of a Gamma(shape, 1) variate; stays finite for tiny shapes where the
/// variate itself underflows.
inline double log_gamma_variate(Rng& rng, double shape) {
  if (shape < 1.0) {
    std::gamma_distribution<double> dist(shape + 1.0, 1.0);
    return std::log(dist(rng)) + std::log(uniform01(rng)) / shape;
  }
  std::gamma_distribution<double> dist(shape, 1.0);
  return std::log(dist(rng));
}

inline double gamma(Rng& rng, double shape, double rate) {
  return std::exp(log_gamma_variate(rng, shape)) / rate;
}

inline double beta(Rng& rng, double a, double b) {
  const double la = log_gamma_variate(rng, a);
  const double lb = log_gamma_variate(rng, b);
  // a / (a + b) evaluated as expit(la - lb)
  const double x = la - lb;
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}

}  // namespace draw
}  // namespace hcea
