// Checkpoint container: magic "STYLOX1", a JSON manifest (names, shapes,
// float offsets, model config, style registry, vocab hash), then raw
// little-endian float32 data. Byte layout is deterministic, so identical
// training runs produce identical files.

#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylox/codec.hpp"
#include "stylox/model.hpp"
#include "stylox/optimizer.hpp"

namespace stylox {

constexpr char kCheckpointMagic[] = "STYLOX1";

struct Checkpoint {
  ModelConfig config;
  StyleRegistry styles;
  ParamStore params;
  int64_t step = 0;
  bool has_optimizer_state = false;
  nlohmann::ordered_json meta;  // free-form (track pair, seeds, corpus info)
};

namespace ckpt_detail {

inline std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void append_floats(std::vector<uint8_t>& out, const std::vector<float>& data) {
  const uint8_t* p = reinterpret_cast<const uint8_t*>(data.data());
  out.insert(out.end(), p, p + data.size() * sizeof(float));
}

}  // namespace ckpt_detail

inline std::vector<uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  nlohmann::ordered_json manifest;
  manifest["version"] = 1;
  manifest["vocab_hash"] = ckpt_detail::hex64(TokenVocab::hash());
  manifest["step"] = ckpt.step;
  manifest["optimizer_state"] = ckpt.has_optimizer_state;
  manifest["model"] = to_json(ckpt.config);
  nlohmann::ordered_json styles = nlohmann::ordered_json::array();
  for (const auto& [name, feel] : ckpt.styles.styles) styles.push_back({name, feel});
  manifest["styles"] = styles;
  manifest["meta"] = ckpt.meta.is_null() ? nlohmann::ordered_json::object() : ckpt.meta;

  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  std::vector<uint8_t> payload;
  int64_t offset = 0;
  auto add_tensor = [&](const std::string& name, const Tensor& t) {
    tensors.push_back({{"name", name}, {"shape", t.shape}, {"offset", offset}});
    ckpt_detail::append_floats(payload, t.data);
    offset += t.size();
  };
  for (const auto& [name, entry] : ckpt.params.params) {
    add_tensor(name, entry.value);
    if (ckpt.has_optimizer_state) {
      add_tensor(name + ".adam_m", entry.m);
      add_tensor(name + ".adam_v", entry.v);
    }
  }
  manifest["tensors"] = tensors;

  std::string mjson = manifest.dump();
  std::vector<uint8_t> out;
  out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 7);
  uint32_t mlen = static_cast<uint32_t>(mjson.size());
  for (int i = 0; i < 4; ++i) out.push_back((mlen >> (8 * i)) & 0xff);
  out.insert(out.end(), mjson.begin(), mjson.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

inline Checkpoint deserialize_checkpoint(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 11 || !std::equal(kCheckpointMagic, kCheckpointMagic + 7, bytes.begin()))
    throw std::runtime_error("not a checkpoint (bad magic)");
  uint32_t mlen = 0;
  for (int i = 0; i < 4; ++i) mlen |= static_cast<uint32_t>(bytes[7 + i]) << (8 * i);
  if (11 + static_cast<size_t>(mlen) > bytes.size())
    throw std::runtime_error("checkpoint manifest truncated");
  nlohmann::json manifest =
      nlohmann::json::parse(bytes.begin() + 11, bytes.begin() + 11 + mlen);

  if (manifest.at("vocab_hash").get<std::string>() != ckpt_detail::hex64(TokenVocab::hash()))
    throw std::runtime_error("checkpoint vocab hash does not match this build's token layout");

  Checkpoint ckpt;
  ckpt.config = model_config_from_json(manifest.at("model"));
  ckpt.step = manifest.value("step", 0);
  ckpt.has_optimizer_state = manifest.value("optimizer_state", false);
  for (const auto& s : manifest.at("styles"))
    ckpt.styles.styles.push_back({s.at(0).get<std::string>(), s.at(1).get<std::string>()});
  ckpt.meta = manifest.value("meta", nlohmann::ordered_json::object());

  const uint8_t* payload = bytes.data() + 11 + mlen;
  size_t payload_floats = (bytes.size() - 11 - mlen) / sizeof(float);
  auto read_tensor = [&](const nlohmann::json& spec) {
    std::vector<int> shape = spec.at("shape").get<std::vector<int>>();
    int64_t offset = spec.at("offset").get<int64_t>();
    Tensor t = Tensor::zeros(shape);
    if (offset < 0 || static_cast<size_t>(offset) + t.data.size() > payload_floats)
      throw std::runtime_error("checkpoint tensor data out of bounds");
    std::memcpy(t.data.data(), payload + offset * sizeof(float), t.data.size() * sizeof(float));
    return t;
  };

  std::map<std::string, Tensor> loaded;
  for (const auto& spec : manifest.at("tensors"))
    loaded[spec.at("name").get<std::string>()] = read_tensor(spec);

  for (auto& [name, tensor] : loaded) {
    if (name.ends_with(".adam_m") || name.ends_with(".adam_v")) continue;
    ParamStore::Entry entry;
    entry.value = tensor;
    auto m = loaded.find(name + ".adam_m");
    auto v = loaded.find(name + ".adam_v");
    entry.m = m != loaded.end() ? m->second : Tensor::zeros(tensor.shape);
    entry.v = v != loaded.end() ? v->second : Tensor::zeros(tensor.shape);
    ckpt.params.params.emplace(name, std::move(entry));
  }
  ckpt.params.step = ckpt.has_optimizer_state ? ckpt.step : 0;
  return ckpt;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  auto bytes = serialize_checkpoint(ckpt);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace stylox
