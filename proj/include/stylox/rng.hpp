// Deterministic random streams (PCG32, XSH-RR 64/32 variant).
//
// The same (seed, stream) pair always yields the same sequence, on any
// platform. Distinct stream ids give statistically independent sequences,
// which the pipeline uses to decorrelate per-song / per-role draws.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace stylox {

class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0) {
    state_ = 0;
    inc_ = (stream << 1) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  uint32_t next_u32() {
    uint64_t old = state_;
    state_ = old * 6364136223846793005ull + inc_;
    uint32_t xorshifted = static_cast<uint32_t>(((old >> 18) ^ old) >> 27);
    uint32_t rot = static_cast<uint32_t>(old >> 59);
    return (xorshifted >> rot) | (xorshifted << ((32 - rot) & 31));
  }

  /// Uniform double in [0, 1) with 32 bits of resolution.
  double uniform() { return next_u32() * (1.0 / 4294967296.0); }

  /// Uniform integer in [0, n), n > 0 (Lemire reduction).
  uint64_t uniform_int(uint64_t n) {
    return (static_cast<uint64_t>(next_u32()) * n) >> 32;
  }

  /// Standard normal via Box-Muller (pairs cached, fully deterministic).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    if (u1 < 1e-12) u1 = 1e-12;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Sample an index from unnormalized non-negative weights (CDF inversion).
  size_t categorical(std::span<const double> weights) {
    if (weights.empty()) throw std::invalid_argument("categorical: empty weights");
    double total = 0;
    for (double w : weights) total += w;
    if (total <= 0) throw std::invalid_argument("categorical: non-positive total weight");
    double u = uniform() * total;
    double acc = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }
  size_t categorical(const std::vector<double>& weights) {
    return categorical(std::span<const double>(weights));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = uniform_int(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_ = 0;
  uint64_t inc_ = 1;
  double spare_ = 0;
  bool has_spare_ = false;
};

}  // namespace stylox
