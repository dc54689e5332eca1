#pragma once
#include <cstdint>
#include <cmath>
#include <random>
#include <string>
#include <string_view>

namespace pricing {

// Deterministic RNG: the mt19937_64 engine is fully specified by the
// standard, but std::normal_distribution et al. are implementation-defined.
// All distributions here are derived from engine draws in a documented way
// so trajectories reproduce byte-for-byte across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ull) : eng_(seed) {}

  void reseed(std::uint64_t seed) {
    eng_.seed(seed);
    has_spare_ = false;
  }

  std::uint64_t next_u64() { return eng_(); }

  // uniform in [0,1): 53-bit mantissa
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // standard normal via polar Box-Muller (spare value cached)
  double normal() {
    if (has_spare_) { has_spare_ = false; return spare_; }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Knuth multiplication method; exp(-mean) is healthy through ~500
  long poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean > 500.0) {
      long k = std::lround(normal(mean, std::sqrt(mean)));
      return k < 0 ? 0 : k;
    }
    double l = std::exp(-mean), p = 1.0;
    long k = 0;
    do { ++k; p *= uniform(); } while (p > l);
    return k - 1;
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64-bit offset basis
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Stable per-run seed: independent of execution order of the replication pool.
inline std::uint64_t run_seed(std::uint64_t base_seed, std::string_view policy,
                              long horizon, int run_id) {
  std::string key = std::to_string(base_seed) + "|" + std::string(policy) + "|" +
                    std::to_string(horizon) + "|" + std::to_string(run_id);
  return fnv1a64(key);
}

}  // namespace pricing
