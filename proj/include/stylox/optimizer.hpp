// Named parameter store with Adam state.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "stylox/rng.hpp"
#include "stylox/tensor.hpp"

namespace stylox {

struct ParamStore {
  struct Entry {
    Tensor value;
    Tensor m;  // first moment
    Tensor v;  // second moment
  };
  std::map<std::string, Entry> params;
  int64_t step = 0;

  Tensor& create(const std::string& name, Tensor init) {
    if (params.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
    Entry e;
    e.m = Tensor::zeros(init.shape);
    e.v = Tensor::zeros(init.shape);
    e.value = std::move(init);
    return params.emplace(name, std::move(e)).first->second.value;
  }

  Tensor& at(const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw std::invalid_argument("unknown parameter: " + name);
    return it->second.value;
  }
  const Tensor& at(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw std::invalid_argument("unknown parameter: " + name);
    return it->second.value;
  }
  bool has(const std::string& name) const { return params.count(name) > 0; }
};

struct AdamConfig {
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

/// One Adam update with bias correction. Gradients are keyed by parameter
/// name; missing keys mean zero gradient for that parameter (moments still
/// decay consistently only for supplied keys, so train loops always supply
/// all keys). Returns false without touching anything if any gradient is
/// non-finite.
inline bool adam_step(ParamStore& store, const std::map<std::string, Tensor>& grads, float lr,
                      const AdamConfig& cfg = {}) {
  for (const auto& [name, g] : grads) {
    for (float x : g.data)
      if (!std::isfinite(x)) return false;
  }
  store.step += 1;
  double bc1 = 1.0 - std::pow(static_cast<double>(cfg.beta1), static_cast<double>(store.step));
  double bc2 = 1.0 - std::pow(static_cast<double>(cfg.beta2), static_cast<double>(store.step));
  for (auto& [name, entry] : store.params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    if (!g.same_shape(entry.value))
      throw std::invalid_argument("adam_step: gradient shape mismatch for " + name);
    for (size_t i = 0; i < g.data.size(); ++i) {
      float gi = g.data[i];
      entry.m.data[i] = cfg.beta1 * entry.m.data[i] + (1.0f - cfg.beta1) * gi;
      entry.v.data[i] = cfg.beta2 * entry.v.data[i] + (1.0f - cfg.beta2) * gi * gi;
      float mhat = entry.m.data[i] / static_cast<float>(bc1);
      float vhat = entry.v.data[i] / static_cast<float>(bc2);
      entry.value.data[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
  return true;
}

/// Uniform(-limit, limit) init with limit = sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot_uniform(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (float& x : t.data) x = static_cast<float>((rng.uniform() * 2.0 - 1.0) * limit);
  return t;
}

inline Tensor uniform_init(std::vector<int> shape, double limit, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (float& x : t.data) x = static_cast<float>((rng.uniform() * 2.0 - 1.0) * limit);
  return t;
}

}  // namespace stylox
