#ifndef MOCO_RNG_HPP_
#define MOCO_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "moco/errors.hpp"

namespace moco {

// Deterministic seeding and sampling. Everything here is pinned to a fixed
// algorithm so that a run with the same master seed reproduces bit-identical
// results on the same build, independent of the standard library.

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t tag_hash(std::string_view tag) {
  uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Seed for (master, index, stage). Used to fan out trials, rounds and
// pipeline stages from one master seed.
inline uint64_t derive_seed(uint64_t master, uint64_t index, std::string_view stage) {
  uint64_t s = master;
  uint64_t a = splitmix64(s);
  s ^= index * 0x9e3779b97f4a7c15ull;
  uint64_t b = splitmix64(s);
  s ^= tag_hash(stage);
  uint64_t c = splitmix64(s);
  return a ^ (b << 1 | b >> 63) ^ c;
}

// xoshiro256++ with splitmix64 seeding.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
  }

  uint64_t next_u64() {
    auto rotl = [](uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling, unbiased.
  uint64_t uniform_index(uint64_t n) {
    if (n == 0) throw ContractViolation("uniform_index: n must be positive");
    const uint64_t threshold = -n % n;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692 * u2);
  }

  // Index sampled proportionally to non-negative weights.
  int categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0 || !std::isfinite(w)) throw ContractViolation("categorical: bad weight");
      total += w;
    }
    if (total <= 0.0) throw ContractViolation("categorical: zero total weight");
    double u = uniform() * total;
    for (size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size() - 1);
  }

  // Flat Dirichlet sample (all concentrations 1).
  std::vector<double> dirichlet_flat(int m) {
    std::vector<double> w(m);
    double total = 0.0;
    for (auto& wi : w) {
      double u = uniform();
      while (u <= 0.0) u = uniform();
      wi = -std::log(u);
      total += wi;
    }
    for (auto& wi : w) wi /= total;
    return w;
  }

 private:
  uint64_t state_[4];
};

}  // namespace moco

#endif  // MOCO_RNG_HPP_
