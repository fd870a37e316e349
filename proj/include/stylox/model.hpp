// Style translation models: a piano-roll CNN + bidirectional GRU encoder
// (roll2seq) or a token-embedding + bidirectional GRU encoder (seq2seq),
// with an additive-attention GRU decoder conditioned on the target style.
//
// Decoder recurrence: s_i = GRU([c_i, style_embed, token_embed(y_{i-1})],
// s_{i-1}), logits = affine(s_i); c_i is the attention-weighted average of
// the bidirectional encoder states.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylox/autodiff.hpp"
#include "stylox/codec.hpp"
#include "stylox/optimizer.hpp"
#include "stylox/rng.hpp"
#include "stylox/tensor.hpp"

namespace stylox {

enum class ModelVariant { roll2seq, seq2seq };

inline std::string variant_name(ModelVariant v) {
  return v == ModelVariant::roll2seq ? "roll2seq" : "seq2seq";
}
inline ModelVariant variant_from_name(const std::string& s) {
  if (s == "roll2seq") return ModelVariant::roll2seq;
  if (s == "seq2seq") return ModelVariant::seq2seq;
  throw std::invalid_argument("unknown model variant: " + s);
}

struct ModelConfig {
  ModelVariant variant = ModelVariant::roll2seq;
  int encoder_hidden = 128;
  int decoder_hidden = 128;
  int conv_channels1 = 256;
  int conv_channels2 = 512;
  int style_embed_dim = 32;
  int token_embed_dim = 64;
  int num_styles = 0;  // 0 disables style conditioning (single-pair mode)
  int max_decode_len = 600;
  float dropout = 0.0f;

  // Fixed conv geometry: kernel == stride per layer, total downsampling x8
  // (16 roll columns per bar -> 2 encoder positions per bar).
  static constexpr int kConvKernel1 = 2, kConvStride1 = 2;
  static constexpr int kConvKernel2 = 4, kConvStride2 = 4;

  bool conditioned() const { return num_styles > 0; }
  int attention_dim() const { return decoder_hidden; }

  void validate() const {
    if (encoder_hidden <= 0 || decoder_hidden <= 0 || conv_channels1 <= 0 ||
        conv_channels2 <= 0 || style_embed_dim <= 0 || token_embed_dim <= 0 ||
        max_decode_len <= 0 || num_styles < 0)
      throw std::invalid_argument("model config: all dimensions must be positive");
    if (dropout < 0.0f || dropout >= 1.0f)
      throw std::invalid_argument("model config: dropout must be in [0, 1)");
  }
};

inline nlohmann::ordered_json to_json(const ModelConfig& c) {
  return {{"variant", variant_name(c.variant)},
          {"encoder_hidden", c.encoder_hidden},
          {"decoder_hidden", c.decoder_hidden},
          {"conv_channels", {c.conv_channels1, c.conv_channels2}},
          {"style_embed_dim", c.style_embed_dim},
          {"token_embed_dim", c.token_embed_dim},
          {"num_styles", c.num_styles},
          {"max_decode_len", c.max_decode_len},
          {"dropout", c.dropout}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.variant = variant_from_name(j.value("variant", "roll2seq"));
  c.encoder_hidden = j.value("encoder_hidden", c.encoder_hidden);
  c.decoder_hidden = j.value("decoder_hidden", c.decoder_hidden);
  if (j.contains("conv_channels")) {
    c.conv_channels1 = j["conv_channels"].at(0).get<int>();
    c.conv_channels2 = j["conv_channels"].at(1).get<int>();
  }
  c.style_embed_dim = j.value("style_embed_dim", c.style_embed_dim);
  c.token_embed_dim = j.value("token_embed_dim", c.token_embed_dim);
  c.num_styles = j.value("num_styles", c.num_styles);
  c.max_decode_len = j.value("max_decode_len", c.max_decode_len);
  c.dropout = j.value("dropout", c.dropout);
  c.validate();
  return c;
}

/// Ordered (name, feel) style registry; row index = style id = the row of
/// the style embedding table.
struct StyleRegistry {
  std::vector<std::pair<std::string, std::string>> styles;

  int id_of(const std::string& name) const {
    for (size_t i = 0; i < styles.size(); ++i)
      if (styles[i].first == name) return static_cast<int>(i);
    std::string known;
    for (const auto& [n, f] : styles) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown style '" + name + "' (available: " + known + ")");
  }
  int size() const { return static_cast<int>(styles.size()); }

  bool operator==(const StyleRegistry&) const = default;
};

// --- parameter construction ---

inline ParamStore init_params(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ParamStore store;
  const int V = TokenVocab::size();
  const int h_enc = cfg.encoder_hidden;
  const int h_dec = cfg.decoder_hidden;
  const int d_a = cfg.attention_dim();

  auto gru = [&](const std::string& prefix, int in, int hidden) {
    store.create(prefix + ".wx", glorot_uniform({in, 3 * hidden}, in, 3 * hidden, rng));
    store.create(prefix + ".wh", glorot_uniform({hidden, 3 * hidden}, hidden, 3 * hidden, rng));
    store.create(prefix + ".b", Tensor::zeros({1, 3 * hidden}));
  };

  int enc_in;
  if (cfg.variant == ModelVariant::roll2seq) {
    int k1 = ModelConfig::kConvKernel1, k2 = ModelConfig::kConvKernel2;
    store.create("conv1.w",
                 glorot_uniform({k1 * 128, cfg.conv_channels1}, k1 * 128, cfg.conv_channels1, rng));
    store.create("conv1.b", Tensor::zeros({1, cfg.conv_channels1}));
    store.create("conv2.w", glorot_uniform({k2 * cfg.conv_channels1, cfg.conv_channels2},
                                           k2 * cfg.conv_channels1, cfg.conv_channels2, rng));
    store.create("conv2.b", Tensor::zeros({1, cfg.conv_channels2}));
    enc_in = cfg.conv_channels2;
  } else {
    store.create("enc.embed", uniform_init({V, cfg.token_embed_dim}, 0.05, rng));
    enc_in = cfg.token_embed_dim;
  }
  gru("enc.fw", enc_in, h_enc);
  gru("enc.bw", enc_in, h_enc);

  store.create("dec.init.w", glorot_uniform({2 * h_enc, h_dec}, 2 * h_enc, h_dec, rng));
  store.create("dec.init.b", Tensor::zeros({1, h_dec}));
  store.create("attn.ws", glorot_uniform({h_dec, d_a}, h_dec, d_a, rng));
  store.create("attn.uh", glorot_uniform({2 * h_enc, d_a}, 2 * h_enc, d_a, rng));
  store.create("attn.v", glorot_uniform({d_a, 1}, d_a, 1, rng));
  store.create("dec.embed", uniform_init({V, cfg.token_embed_dim}, 0.05, rng));
  if (cfg.conditioned())
    store.create("style.embed", uniform_init({cfg.num_styles, cfg.style_embed_dim}, 0.05, rng));

  int dec_in = 2 * h_enc + cfg.token_embed_dim + (cfg.conditioned() ? cfg.style_embed_dim : 0);
  gru("dec.gru", dec_in, h_dec);
  store.create("out.w", glorot_uniform({h_dec, V}, h_dec, V, rng));
  store.create("out.b", Tensor::zeros({1, V}));
  return store;
}

// --- forward graphs ---

/// Tape-bound parameters: one leaf per parameter, in deterministic name order.
struct BoundParams {
  std::map<std::string, Var> vars;

  Var at(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) throw std::invalid_argument("unbound parameter: " + name);
    return it->second;
  }
};

inline BoundParams bind_params(Tape& tape, const ParamStore& store) {
  BoundParams bound;
  for (const auto& [name, entry] : store.params) bound.vars[name] = tape.leaf(entry.value);
  return bound;
}

namespace model_detail {

struct GruRefs {
  Var wx, wh, b;
  int hidden;
};

inline GruRefs gru_refs(const BoundParams& p, const std::string& prefix, int hidden) {
  return {p.at(prefix + ".wx"), p.at(prefix + ".wh"), p.at(prefix + ".b"), hidden};
}

inline Var gru_step(Tape& t, const GruRefs& g, Var x, Var h) {
  int H = g.hidden;
  Var gx = t.add(t.matmul(x, g.wx), g.b);
  Var gh = t.matmul(h, g.wh);
  Var r = t.sigmoid(t.add(t.slice_cols(gx, 0, H), t.slice_cols(gh, 0, H)));
  Var z = t.sigmoid(t.add(t.slice_cols(gx, H, 2 * H), t.slice_cols(gh, H, 2 * H)));
  Var n = t.tanh(t.add(t.slice_cols(gx, 2 * H, 3 * H), t.mul(r, t.slice_cols(gh, 2 * H, 3 * H))));
  Var ones = t.leaf(Tensor::full({t.value(h).rows(), H}, 1.0f));
  return t.add(t.mul(z, h), t.mul(t.sub(ones, z), n));
}

/// Inverted-dropout mask as a constant; identity when rate is 0 or the
/// caller is not training.
inline Var dropout(Tape& t, Var x, float rate, Rng* rng) {
  if (rate <= 0.0f || rng == nullptr) return x;
  const Tensor& v = t.value(x);
  Tensor mask = Tensor::zeros(v.shape);
  float keep = 1.0f - rate;
  for (float& m : mask.data) m = rng->uniform() < keep ? 1.0f / keep : 0.0f;
  return t.mul(x, t.leaf(std::move(mask)));
}

}  // namespace model_detail

/// Encoder outputs: time-major stacked bidirectional states (row j*B + b),
/// their attention projection, the decoder's initial state, and an optional
/// additive attention mask for padded source positions.
struct EncoderStates {
  Var H;
  Var UaH;
  Var s0;
  int positions = 0;
  int batch = 0;
  std::optional<Tensor> attn_mask;  // [B x J], 0 or -1e9
};

namespace model_detail {

inline Var init_state(Tape& t, const BoundParams& p, Var fw_final, Var bw_final) {
  Var cat = t.concat_cols({fw_final, bw_final});
  return t.tanh(t.add(t.matmul(cat, p.at("dec.init.w")), p.at("dec.init.b")));
}

/// Bidirectional GRU over a time-major input [T*B x in]; per-step keep-masks
/// (nullptr for fully dense batches) freeze the state at padded positions.
inline EncoderStates bigru(Tape& t, const BoundParams& p, const ModelConfig& cfg, Var x_flat,
                           int batch, int T, const std::vector<std::vector<float>>* keep) {
  GruRefs fw = gru_refs(p, "enc.fw", cfg.encoder_hidden);
  GruRefs bw = gru_refs(p, "enc.bw", cfg.encoder_hidden);
  int H = cfg.encoder_hidden;

  auto step_rows = [&](int step) {
    std::vector<int> rows(batch);
    for (int b = 0; b < batch; ++b) rows[b] = step * batch + b;
    return rows;
  };
  auto masked = [&](Var h_new, Var h_prev, int step) {
    if (!keep) return h_new;
    Tensor keep_m = Tensor::zeros({batch, H});
    Tensor drop_m = Tensor::zeros({batch, H});
    for (int b = 0; b < batch; ++b) {
      float k = (*keep)[step][b];
      for (int c = 0; c < H; ++c) {
        keep_m.at(b, c) = k;
        drop_m.at(b, c) = 1.0f - k;
      }
    }
    return t.add(t.mul(h_new, t.leaf(std::move(keep_m))), t.mul(h_prev, t.leaf(std::move(drop_m))));
  };

  std::vector<Var> fw_states(T), bw_states(T);
  Var h = t.leaf(Tensor::zeros({batch, H}));
  for (int step = 0; step < T; ++step) {
    Var x = t.gather_rows(x_flat, step_rows(step));
    h = masked(gru_step(t, fw, x, h), h, step);
    fw_states[step] = h;
  }
  Var fw_final = h;
  h = t.leaf(Tensor::zeros({batch, H}));
  for (int step = T - 1; step >= 0; --step) {
    Var x = t.gather_rows(x_flat, step_rows(step));
    h = masked(gru_step(t, bw, x, h), h, step);
    bw_states[step] = h;
  }
  Var bw_final = h;

  std::vector<Var> rows(T);
  for (int step = 0; step < T; ++step)
    rows[step] = t.concat_cols({fw_states[step], bw_states[step]});
  EncoderStates enc;
  enc.H = t.concat_rows(rows);
  enc.UaH = t.matmul(enc.H, p.at("attn.uh"));
  enc.s0 = init_state(t, p, fw_final, bw_final);
  enc.positions = T;
  enc.batch = batch;
  return enc;
}

}  // namespace model_detail

/// Flatten piano rolls to the conv input layout [B*T x 128] (row b*T + t).
inline Tensor rolls_to_tensor(const std::vector<const PianoRoll*>& rolls) {
  if (rolls.empty()) throw std::invalid_argument("rolls_to_tensor: empty batch");
  int T = rolls[0]->cols;
  int B = static_cast<int>(rolls.size());
  Tensor x = Tensor::zeros({B * T, 128});
  for (int b = 0; b < B; ++b) {
    if (rolls[b]->cols != T) throw std::invalid_argument("rolls_to_tensor: ragged batch");
    for (int p = 0; p < 128; ++p)
      for (int c = 0; c < T; ++c)
        x.at(b * T + c, p) = static_cast<float>(rolls[b]->at(p, c));
  }
  return x;
}

/// Piano-roll encoder: two strided conv layers (x8 temporal downsampling,
/// two positions per bar) followed by a bidirectional GRU.
inline EncoderStates encode_roll(Tape& t, const BoundParams& p, const ModelConfig& cfg,
                                 const std::vector<const PianoRoll*>& rolls, Rng* dropout_rng) {
  if (cfg.variant != ModelVariant::roll2seq)
    throw std::invalid_argument("encode_roll requires a roll2seq config");
  int B = static_cast<int>(rolls.size());
  int T = rolls[0]->cols;
  if (T % 8 != 0) throw std::invalid_argument("encode_roll: columns must be divisible by 8");

  // Conv input is time-major per example: rows b*T + t. Rebuild as leaf.
  Var x = t.leaf(rolls_to_tensor(rolls));
  Var c1 = t.relu(t.conv1d(x, p.at("conv1.w"), p.at("conv1.b"), B, ModelConfig::kConvKernel1,
                           ModelConfig::kConvStride1));
  Var c2 = t.relu(t.conv1d(c1, p.at("conv2.w"), p.at("conv2.b"), B, ModelConfig::kConvKernel2,
                           ModelConfig::kConvStride2));
  int T2 = T / (ModelConfig::kConvStride1 * ModelConfig::kConvStride2);
  c2 = model_detail::dropout(t, c2, cfg.dropout, dropout_rng);

  // conv output rows are example-major (b*T2 + u); the biGRU wants
  // time-major (u*B + b).
  std::vector<int> order(static_cast<size_t>(B) * T2);
  for (int u = 0; u < T2; ++u)
    for (int b = 0; b < B; ++b) order[static_cast<size_t>(u) * B + b] = b * T2 + u;
  Var x_flat = t.gather_rows(c2, order);
  return model_detail::bigru(t, p, cfg, x_flat, B, T2, nullptr);
}

/// Token-sequence encoder: embedding + bidirectional GRU. Sequences are
/// padded to the longest in the batch; padded positions are masked out of
/// the recurrence and the attention.
inline EncoderStates encode_seq(Tape& t, const BoundParams& p, const ModelConfig& cfg,
                                const std::vector<const std::vector<int>*>& seqs,
                                Rng* dropout_rng) {
  if (cfg.variant != ModelVariant::seq2seq)
    throw std::invalid_argument("encode_seq requires a seq2seq config");
  int B = static_cast<int>(seqs.size());
  int T = 0;
  for (const auto* s : seqs) T = std::max(T, static_cast<int>(s->size()));
  if (T == 0) throw std::invalid_argument("encode_seq: empty batch");

  std::vector<int> flat(static_cast<size_t>(T) * B, TokenVocab::kPad);
  std::vector<std::vector<float>> keep(T, std::vector<float>(B, 0.0f));
  bool any_pad = false;
  for (int b = 0; b < B; ++b) {
    for (int u = 0; u < T; ++u) {
      if (u < static_cast<int>(seqs[b]->size())) {
        flat[static_cast<size_t>(u) * B + b] = (*seqs[b])[u];
        keep[u][b] = 1.0f;
      } else {
        any_pad = true;
      }
    }
  }
  Var emb = t.embedding(p.at("enc.embed"), flat);
  emb = model_detail::dropout(t, emb, cfg.dropout, dropout_rng);
  EncoderStates enc =
      model_detail::bigru(t, p, cfg, emb, B, T, any_pad ? &keep : nullptr);
  if (any_pad) {
    Tensor mask = Tensor::zeros({B, T});
    for (int b = 0; b < B; ++b)
      for (int u = 0; u < T; ++u)
        if (u >= static_cast<int>(seqs[b]->size())) mask.at(b, u) = -1e9f;
    enc.attn_mask = std::move(mask);
  }
  return enc;
}

struct AttentionOut {
  Var alpha;    // [B x J], rows sum to 1
  Var context;  // [B x 2*encoder_hidden]
};

/// Additive attention: e_j = v . tanh(Ws s_prev + Ua h_j), alpha = softmax(e),
/// context = sum_j alpha_j h_j.
inline AttentionOut attend(Tape& t, const BoundParams& p, const EncoderStates& enc, Var s_prev) {
  Var ws = t.matmul(s_prev, p.at("attn.ws"));
  Var e = t.attn_scores(ws, enc.UaH, p.at("attn.v"), enc.positions);
  if (enc.attn_mask) e = t.add(e, t.leaf(*enc.attn_mask));
  AttentionOut out;
  out.alpha = t.softmax(e);
  out.context = t.attn_context(out.alpha, enc.H);
  return out;
}

struct DecodeStepOut {
  Var state;   // [B x decoder_hidden]
  Var logits;  // [B x vocab]
  Var alpha;   // attention weights used this step
};

/// One decoder step. `style` is the style-embedding rows for the batch, or
/// an invalid Var when the model is unconditioned.
inline DecodeStepOut decode_step(Tape& t, const BoundParams& p, const ModelConfig& cfg,
                                 const EncoderStates& enc, Var style, Var y_prev_embed,
                                 Var s_prev) {
  AttentionOut attn = attend(t, p, enc, s_prev);
  std::vector<Var> parts = {attn.context};
  if (cfg.conditioned()) {
    if (!style.valid()) throw std::invalid_argument("decode_step: missing style embedding");
    parts.push_back(style);
  }
  parts.push_back(y_prev_embed);
  Var x = t.concat_cols(parts);
  Var state =
      model_detail::gru_step(t, model_detail::gru_refs(p, "dec.gru", cfg.decoder_hidden), x, s_prev);
  Var logits = t.add(t.matmul(state, p.at("out.w")), p.at("out.b"));
  return {state, logits, attn.alpha};
}

// --- teacher-forced loss over a batch ---

/// One training example: a source representation (roll or token ids), the
/// target token ids (BOS ... EOS), and the target style id.
struct TrainExample {
  int64_t id = 0;
  PianoRoll roll;             // roll2seq input
  std::vector<int> src_ids;   // seq2seq input
  std::vector<int> tgt_ids;   // BOS ... EOS
  int style_id = 0;
};

struct LossStats {
  double loss = 0;       // mean over non-pad target tokens
  int64_t tokens = 0;    // non-pad target tokens
  int64_t correct = 0;   // argmax hits among them
  double accuracy() const { return tokens ? static_cast<double>(correct) / tokens : 0.0; }
};

/// Build the encoder for a batch of examples (dispatching on variant).
inline EncoderStates encode_batch(Tape& t, const BoundParams& p, const ModelConfig& cfg,
                                  const std::vector<const TrainExample*>& batch,
                                  Rng* dropout_rng) {
  if (cfg.variant == ModelVariant::roll2seq) {
    std::vector<const PianoRoll*> rolls;
    for (const TrainExample* e : batch) rolls.push_back(&e->roll);
    return encode_roll(t, p, cfg, rolls, dropout_rng);
  }
  std::vector<const std::vector<int>*> seqs;
  for (const TrainExample* e : batch) seqs.push_back(&e->src_ids);
  return encode_seq(t, p, cfg, seqs, dropout_rng);
}

/// Teacher-forced cross-entropy (PAD-masked mean) over a batch. The batch is
/// canonically ordered by the caller; reduction is fixed, so the loss is
/// invariant to the order examples were supplied in.
inline Var teacher_forced_loss(Tape& t, const BoundParams& p, const ModelConfig& cfg,
                               const std::vector<const TrainExample*>& batch, LossStats* stats,
                               Rng* dropout_rng = nullptr) {
  if (batch.empty()) throw std::invalid_argument("teacher_forced_loss: empty batch");
  int B = static_cast<int>(batch.size());
  EncoderStates enc = encode_batch(t, p, cfg, batch, dropout_rng);

  int steps = 0;
  int64_t total_valid = 0;
  for (const TrainExample* e : batch) {
    if (e->tgt_ids.size() < 2 || e->tgt_ids.front() != TokenVocab::kBos)
      throw std::invalid_argument("teacher_forced_loss: target must be BOS ... EOS");
    steps = std::max(steps, static_cast<int>(e->tgt_ids.size()) - 1);
    for (size_t i = 1; i < e->tgt_ids.size(); ++i)
      if (e->tgt_ids[i] != TokenVocab::kPad) ++total_valid;
  }

  Var style;
  if (cfg.conditioned()) {
    std::vector<int> style_ids;
    for (const TrainExample* e : batch) style_ids.push_back(e->style_id);
    style = t.embedding(p.at("style.embed"), style_ids);
  }

  Var s = enc.s0;
  Var total = t.leaf(Tensor::scalar(0.0f));
  int64_t correct = 0;
  for (int i = 0; i < steps; ++i) {
    std::vector<int> prev_ids(B, TokenVocab::kPad);
    std::vector<int> targets(B, TokenVocab::kPad);
    std::vector<float> mask(B, 0.0f);
    for (int b = 0; b < B; ++b) {
      const auto& tgt = batch[b]->tgt_ids;
      if (i + 1 < static_cast<int>(tgt.size()) && tgt[i + 1] != TokenVocab::kPad) {
        prev_ids[b] = tgt[i];
        targets[b] = tgt[i + 1];
        mask[b] = 1.0f;
      }
    }
    Var y_embed = t.embedding(p.at("dec.embed"), prev_ids);
    DecodeStepOut step = decode_step(t, p, cfg, enc, style, y_embed, s);
    s = step.state;
    const Tensor& logits = t.value(step.logits);
    for (int b = 0; b < B; ++b) {
      if (mask[b] == 0.0f) continue;
      int best = 0;
      const float* row = &logits.data[static_cast<size_t>(b) * logits.cols()];
      for (int c = 1; c < logits.cols(); ++c)
        if (row[c] > row[best]) best = c;
      if (best == targets[b]) ++correct;
    }
    total = t.add(total, t.cross_entropy(step.logits, std::move(targets), std::move(mask),
                                         /*mean=*/false));
  }
  Var loss = t.scale(total, total_valid > 0 ? 1.0f / static_cast<float>(total_valid) : 0.0f);
  if (stats) {
    stats->loss = t.value(loss).item();
    stats->tokens = total_valid;
    stats->correct = correct;
  }
  return loss;
}

// --- greedy translation ---

struct TranslateResult {
  EventSeq events;     // BOS ... (EOS if emitted within the cap)
  int decode_anomalies = 0;
  Segment segment;     // decoded, clipped to 8 bars
};

struct TranslateOptions {
  float temperature = 0.0f;  // 0 = greedy argmax; > 0 samples (off by default)
  uint64_t sample_seed = 0;
};

/// Autoregressive decoding from BOS until EOS or max_decode_len.
inline TranslateResult translate_segment(const ParamStore& params, const ModelConfig& cfg,
                                         const TrainExample& input, int style_id,
                                         const TranslateOptions& opts = {}) {
  Tape t;
  BoundParams p = bind_params(t, params);
  std::vector<const TrainExample*> batch = {&input};
  EncoderStates enc = encode_batch(t, p, cfg, batch, nullptr);

  Var style;
  if (cfg.conditioned()) style = t.embedding(p.at("style.embed"), {style_id});

  Rng sample_rng(opts.sample_seed);
  std::vector<int> out_ids = {TokenVocab::kBos};
  Var s = enc.s0;
  int prev = TokenVocab::kBos;
  for (int i = 0; i < cfg.max_decode_len; ++i) {
    Var y_embed = t.embedding(p.at("dec.embed"), {prev});
    DecodeStepOut step = decode_step(t, p, cfg, enc, style, y_embed, s);
    s = step.state;
    const Tensor& logits = t.value(step.logits);
    int next;
    if (opts.temperature > 0.0f) {
      std::vector<double> w(logits.cols());
      double m = logits.data[0];
      for (float v : logits.data) m = std::max(m, static_cast<double>(v));
      for (int c = 0; c < logits.cols(); ++c)
        w[c] = std::exp((logits.data[c] - m) / opts.temperature);
      next = static_cast<int>(sample_rng.categorical(w));
    } else {
      next = 0;
      for (int c = 1; c < logits.cols(); ++c)
        if (logits.data[c] > logits.data[next]) next = c;
    }
    out_ids.push_back(next);
    if (next == TokenVocab::kEos) break;
    prev = next;
  }

  TranslateResult res;
  res.events = detokenize(out_ids);
  DecodeResult dec = decode_events(res.events);
  res.segment = std::move(dec.segment);
  res.decode_anomalies = dec.anomalies;
  return res;
}

/// Style-embedding table rows with names and feel labels, for export.
struct StyleEmbeddingRow {
  std::string name;
  std::string feel;
  std::vector<float> vector;
};

inline std::vector<StyleEmbeddingRow> export_style_embeddings(const ParamStore& params,
                                                              const StyleRegistry& registry) {
  if (!params.has("style.embed"))
    throw std::invalid_argument("checkpoint has no style table (single-pair model)");
  const Tensor& table = params.at("style.embed");
  if (table.rows() != registry.size())
    throw std::invalid_argument("style table rows do not match the registry");
  std::vector<StyleEmbeddingRow> rows;
  for (int i = 0; i < table.rows(); ++i) {
    StyleEmbeddingRow row;
    row.name = registry.styles[i].first;
    row.feel = registry.styles[i].second;
    row.vector.assign(&table.data[static_cast<size_t>(i) * table.cols()],
                      &table.data[static_cast<size_t>(i) * table.cols()] + table.cols());
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace stylox
