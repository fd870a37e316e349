// Training loop: teacher forcing, Adam with multiplicative learning-rate
// decay on validation plateau, early stopping, best-checkpoint tracking.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "stylox/autodiff.hpp"
#include "stylox/model.hpp"
#include "stylox/optimizer.hpp"
#include "stylox/rng.hpp"

namespace stylox {

struct TrainParams {
  int batch_size = 16;
  float lr = 1e-3f;
  float lr_decay = 0.5f;     // applied after lr_patience bad evals
  int lr_patience = 2;
  int stop_patience = 5;     // evals without improvement before stopping
  int eval_interval = 100;   // steps between validation evals
  int64_t max_steps = 200000;
  float grad_clip = 5.0f;    // global L2 norm; 0 disables
  uint64_t seed = 1;
  double stop_at_accuracy = 0.0;  // stop once validation accuracy reaches this (0 = off)
};

struct CurveRow {
  int64_t step;
  double train_loss;
  double val_loss;
  double val_accuracy;
  float lr;
};

struct TrainResult {
  ParamStore params;  // best-validation weights (with optimizer state)
  std::vector<CurveRow> curve;
  bool diverged = false;
  int64_t steps = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
};

namespace train_detail {

/// Batches bucketed by target length: examples sorted by (length, id), cut
/// into fixed chunks. The sort also fixes the reduction order, making batch
/// loss invariant to the order examples were supplied in.
inline std::vector<std::vector<const TrainExample*>> make_batches(
    const std::vector<TrainExample>& examples, int batch_size) {
  std::vector<const TrainExample*> sorted;
  sorted.reserve(examples.size());
  for (const TrainExample& e : examples) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](const TrainExample* a, const TrainExample* b) {
    if (a->tgt_ids.size() != b->tgt_ids.size()) return a->tgt_ids.size() < b->tgt_ids.size();
    return a->id < b->id;
  });
  std::vector<std::vector<const TrainExample*>> batches;
  for (size_t at = 0; at < sorted.size(); at += batch_size) {
    size_t end = std::min(at + batch_size, sorted.size());
    batches.emplace_back(sorted.begin() + at, sorted.begin() + end);
  }
  return batches;
}

inline std::map<std::string, Tensor> collect_grads(Tape& tape, const BoundParams& bound) {
  std::map<std::string, Tensor> grads;
  for (const auto& [name, var] : bound.vars) grads[name] = tape.grad(var);
  return grads;
}

inline void clip_global_norm(std::map<std::string, Tensor>& grads, float clip) {
  if (clip <= 0) return;
  double sq = 0;
  for (const auto& [name, g] : grads)
    for (float x : g.data) sq += static_cast<double>(x) * x;
  double norm = std::sqrt(sq);
  if (norm <= clip) return;
  float s = static_cast<float>(clip / norm);
  for (auto& [name, g] : grads)
    for (float& x : g.data) x *= s;
}

inline LossStats evaluate(const ParamStore& params, const ModelConfig& cfg,
                          const std::vector<std::vector<const TrainExample*>>& batches) {
  LossStats total;
  double loss_weighted = 0;
  for (const auto& batch : batches) {
    Tape tape;
    BoundParams bound = bind_params(tape, params);
    LossStats stats;
    teacher_forced_loss(tape, bound, cfg, batch, &stats);
    loss_weighted += stats.loss * static_cast<double>(stats.tokens);
    total.tokens += stats.tokens;
    total.correct += stats.correct;
  }
  total.loss = total.tokens ? loss_weighted / static_cast<double>(total.tokens) : 0.0;
  return total;
}

}  // namespace train_detail

using ProgressFn = std::function<void(const CurveRow&)>;

/// Train a model on teacher-forced pairs. Fully deterministic given the
/// params seed and TrainParams seed. Returns the weights of the best
/// validation eval; a non-finite loss aborts with the best snapshot and the
/// diverged flag set.
inline TrainResult train_model(const ModelConfig& cfg, ParamStore params,
                               const std::vector<TrainExample>& train_examples,
                               const std::vector<TrainExample>& val_examples,
                               const TrainParams& tp, const ProgressFn& progress = nullptr) {
  if (train_examples.empty()) throw std::invalid_argument("train_model: no training examples");
  auto train_batches = train_detail::make_batches(train_examples, tp.batch_size);
  auto val_batches = train_detail::make_batches(
      val_examples.empty() ? train_examples : val_examples, tp.batch_size);

  Rng shuffle_rng(tp.seed, 0xb41c5);
  Rng dropout_rng(tp.seed, 0xd404);

  TrainResult result;
  result.params = params;  // snapshot of the init until the first eval

  float lr = tp.lr;
  int bad_lr = 0, bad_stop = 0;
  double train_loss_acc = 0;
  int64_t train_loss_batches = 0;
  bool stop = false;

  std::vector<size_t> order(train_batches.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  while (!stop && result.steps < tp.max_steps) {
    shuffle_rng.shuffle(order);
    for (size_t oi = 0; oi < order.size() && !stop; ++oi) {
      const auto& batch = train_batches[order[oi]];
      Tape tape;
      BoundParams bound = bind_params(tape, params);
      LossStats stats;
      Var loss = teacher_forced_loss(tape, bound, cfg, batch, &stats,
                                     cfg.dropout > 0 ? &dropout_rng : nullptr);
      if (!std::isfinite(stats.loss)) {
        result.diverged = true;
        return result;
      }
      tape.backward(loss);
      auto grads = train_detail::collect_grads(tape, bound);
      train_detail::clip_global_norm(grads, tp.grad_clip);
      if (!adam_step(params, grads, lr)) {
        result.diverged = true;
        return result;
      }
      ++result.steps;
      train_loss_acc += stats.loss;
      ++train_loss_batches;

      if (result.steps % tp.eval_interval == 0 || result.steps >= tp.max_steps) {
        LossStats val = train_detail::evaluate(params, cfg, val_batches);
        CurveRow row{result.steps,
                     train_loss_batches ? train_loss_acc / train_loss_batches : 0.0,
                     val.loss, val.accuracy(), lr};
        result.curve.push_back(row);
        if (progress) progress(row);
        train_loss_acc = 0;
        train_loss_batches = 0;

        if (val.loss < result.best_val_loss) {
          result.best_val_loss = val.loss;
          result.params = params;
          bad_lr = 0;
          bad_stop = 0;
        } else {
          ++bad_lr;
          ++bad_stop;
          if (bad_lr >= tp.lr_patience) {
            lr *= tp.lr_decay;
            bad_lr = 0;
          }
          if (bad_stop >= tp.stop_patience) stop = true;
        }
        if (tp.stop_at_accuracy > 0 && val.accuracy() >= tp.stop_at_accuracy) stop = true;
        if (result.steps >= tp.max_steps) stop = true;
      }
    }
  }
  return result;
}

}  // namespace stylox
