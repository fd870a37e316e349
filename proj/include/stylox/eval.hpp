// Corpus-level evaluation: translate the held-out split, score content
// preservation and style fit per target style, and attach the source /
// reference / random baselines.
//
// Content preservation always compares the output-role track of the
// translation against the same role's track in the source-style render, so
// the 'source' baseline scores 1 by construction. Reference profiles come
// from the training split, separately per style.

#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "stylox/checkpoint.hpp"
#include "stylox/corpus.hpp"
#include "stylox/metrics.hpp"
#include "stylox/model.hpp"
#include "stylox/train.hpp"

namespace stylox {

struct EvalRow {
  std::string model;  // checkpoint label, or source / reference / random
  std::string track;
  std::string target_style;
  double content_preservation = 0;
  double macro_style = 0;
  double song_style_mean = 0;
  double song_style_std = 0;
  double anomaly_rate = 0;  // decode anomalies per translated segment
  bool flagged = false;     // zero profile somewhere in this row
};

/// One scored output segment, aligned with a corpus example.
struct TranslatedSegment {
  std::string song_id;
  int segment_index = 0;
  std::string target_style;
  Segment output;
  Segment source;     // same-role track of the source render
  Segment reference;  // same-role track of the target render
  int anomalies = 0;
};

/// Per-style reference profiles of one role's track over a split.
inline std::map<std::string, StyleProfile> reference_profiles(const PairedCorpus& corpus,
                                                              Role role,
                                                              Split split = Split::train) {
  std::map<std::string, ProfileAccumulator> acc;
  for (const auto& [key, song] : corpus.renders) {
    auto sp = corpus.song_split.find(key.song_id);
    if (sp == corpus.song_split.end() || sp->second != split) continue;
    auto track = song.tracks.find(role);
    if (track == song.tracks.end()) continue;
    int windows = corpus.windows_per_song.at(key.song_id);
    for (const Segment& s : segment(track->second, windows)) acc[key.style].add(s);
  }
  std::map<std::string, StyleProfile> out;
  for (auto& [style, a] : acc) out[style] = a.profile();
  return out;
}

/// Run an index-parallel loop with deterministic results (output slots are
/// fixed by index; worker count does not affect the outcome).
inline void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      for (size_t i = static_cast<size_t>(w); i < n; i += static_cast<size_t>(jobs)) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

/// Translate every example of a split with a checkpoint, carrying the
/// aligned source and reference segments along.
inline std::vector<TranslatedSegment> translate_split(const PairedCorpus& corpus,
                                                      const Checkpoint& ckpt, const TrackPair& tp,
                                                      Split split, int jobs = 1) {
  StyleRegistry registry;
  registry.styles = ckpt.styles.styles;

  std::vector<const PairExample*> todo;
  for (const PairExample& ex : corpus.examples)
    if (ex.split == split) todo.push_back(&ex);

  std::vector<TranslatedSegment> out(todo.size());
  parallel_for(todo.size(), jobs, [&](size_t i) {
    const PairExample& ex = *todo[i];
    int windows = corpus.windows_per_song.at(ex.song_id);
    const Song& src_song = corpus.render_for({ex.song_id, ex.source_style, ex.source_render});
    const Song& tgt_song = corpus.render_for({ex.song_id, ex.target_style, ex.target_render});
    TrackSelector out_sel =
        tp.output == Role::bass ? TrackSelector::bass : TrackSelector::piano;

    TrainExample input;
    Segment src_repr = segment_of_render(src_song, tp.input, ex.segment_index, windows);
    if (ckpt.config.variant == ModelVariant::roll2seq)
      input.roll = to_piano_roll(src_repr);
    else
      input.src_ids =
          tokenize(encode_events(src_repr, tp.input == TrackSelector::piano));

    int style_id = ckpt.config.conditioned() ? registry.id_of(ex.target_style) : 0;
    TranslateResult res = translate_segment(ckpt.params, ckpt.config, input, style_id);

    TranslatedSegment t;
    t.song_id = ex.song_id;
    t.segment_index = ex.segment_index;
    t.target_style = ex.target_style;
    t.output = std::move(res.segment);
    t.source = segment_of_render(src_song, out_sel, ex.segment_index, windows);
    t.reference = segment_of_render(tgt_song, out_sel, ex.segment_index, windows);
    t.anomalies = res.decode_anomalies;
    out[i] = std::move(t);
  });
  return out;
}

namespace eval_detail {

/// Score one model's outputs per target style against reference profiles.
inline std::vector<EvalRow> score(const std::string& model_label, const std::string& track,
                                  const std::vector<TranslatedSegment>& segments,
                                  const std::function<const Segment&(const TranslatedSegment&)>& pick,
                                  const std::map<std::string, StyleProfile>& refs,
                                  bool count_anomalies) {
  std::map<std::string, std::vector<const TranslatedSegment*>> by_style;
  for (const TranslatedSegment& t : segments) by_style[t.target_style].push_back(&t);

  std::vector<EvalRow> rows;
  for (const auto& [style, items] : by_style) {
    auto ref = refs.find(style);
    if (ref == refs.end() || ref->second.zero()) continue;
    EvalRow row;
    row.model = model_label;
    row.track = track;
    row.target_style = style;

    double cp = 0;
    int64_t anomalies = 0;
    std::vector<Segment> pooled;
    std::map<std::string, std::vector<Segment>> by_song;
    for (const TranslatedSegment* t : items) {
      cp += content_preservation(pick(*t), t->source);
      anomalies += count_anomalies ? t->anomalies : 0;
      pooled.push_back(pick(*t));
      by_song[t->song_id].push_back(pick(*t));
    }
    row.content_preservation = cp / static_cast<double>(items.size());
    row.anomaly_rate = static_cast<double>(anomalies) / static_cast<double>(items.size());

    StyleFit macro = style_fit_macro(pooled, ref->second);
    row.macro_style = macro.value;
    row.flagged = macro.flagged;
    std::vector<std::vector<Segment>> songs;
    for (auto& [song, segs] : by_song) songs.push_back(std::move(segs));
    SongStyleFit song_fit = style_fit_song(songs, ref->second);
    row.song_style_mean = song_fit.mean;
    row.song_style_std = song_fit.stddev;
    row.flagged |= song_fit.flagged_songs > 0;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace eval_detail

struct EvalOptions {
  bool baselines = true;
  uint64_t random_seed = 1;
  int jobs = 1;
  Split split = Split::test;
  std::string model_label = "model";
};

/// Score precomputed outputs (already aligned with their source/reference
/// segments) plus baselines.
inline std::vector<EvalRow> evaluate_outputs(const std::vector<TranslatedSegment>& outputs,
                                             const std::map<std::string, StyleProfile>& refs,
                                             const std::string& track, const EvalOptions& opts) {
  std::vector<EvalRow> rows = eval_detail::score(
      opts.model_label, track, outputs,
      [](const TranslatedSegment& t) -> const Segment& { return t.output; }, refs, true);
  if (!opts.baselines) return rows;

  auto src_rows = eval_detail::score(
      "source", track, outputs,
      [](const TranslatedSegment& t) -> const Segment& { return t.source; }, refs, false);
  auto ref_rows = eval_detail::score(
      "reference", track, outputs,
      [](const TranslatedSegment& t) -> const Segment& { return t.reference; }, refs, false);

  // Random baseline: per target style, a derangement of the reference
  // segments (right style, wrong content).
  std::vector<TranslatedSegment> permuted = outputs;
  std::map<std::string, std::vector<size_t>> by_style;
  for (size_t i = 0; i < outputs.size(); ++i)
    by_style[outputs[i].target_style].push_back(i);
  Rng rng(opts.random_seed, 0x9a9d);
  for (auto& [style, idx] : by_style) {
    auto perm = randomized_pairing(idx.size(), rng);
    for (size_t i = 0; i < idx.size(); ++i)
      permuted[idx[i]].reference = outputs[idx[perm[i]]].reference;
  }
  auto rnd_rows = eval_detail::score(
      "random", track, permuted,
      [](const TranslatedSegment& t) -> const Segment& { return t.reference; }, refs, false);

  rows.insert(rows.end(), src_rows.begin(), src_rows.end());
  rows.insert(rows.end(), ref_rows.begin(), ref_rows.end());
  rows.insert(rows.end(), rnd_rows.begin(), rnd_rows.end());
  return rows;
}

/// Full evaluation of a checkpoint over a corpus split. Model rows first,
/// then (if enabled) source / reference / random baseline rows.
inline std::vector<EvalRow> evaluate_checkpoint(const PairedCorpus& corpus, const Checkpoint& ckpt,
                                                const EvalOptions& opts = {}) {
  TrackPair tp = track_pair_from_name(ckpt.meta.at("track_pair").get<std::string>());
  std::string track = role_name(tp.output);
  auto refs = reference_profiles(corpus, tp.output, Split::train);
  auto outputs = translate_split(corpus, ckpt, tp, opts.split, opts.jobs);
  return evaluate_outputs(outputs, refs, track, opts);
}

// --- CSV output ---

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string report_to_csv(const std::vector<EvalRow>& rows) {
  std::string out =
      "model,track,target_style,content_preservation,macro_style,song_style_mean,"
      "song_style_std,anomaly_rate,flagged\n";
  for (const EvalRow& r : rows) {
    out += r.model + "," + r.track + "," + r.target_style + "," +
           format_double(r.content_preservation) + "," + format_double(r.macro_style) + "," +
           format_double(r.song_style_mean) + "," + format_double(r.song_style_std) + "," +
           format_double(r.anomaly_rate) + "," + (r.flagged ? "1" : "0") + "\n";
  }
  return out;
}

inline std::string matrix_to_csv(const SimilarityMatrix& m) {
  std::string out = "name";
  for (const std::string& n : m.names) out += "," + n;
  out += "\n";
  for (size_t i = 0; i < m.names.size(); ++i) {
    out += m.names[i];
    for (size_t j = 0; j < m.names.size(); ++j) out += "," + format_double(m.cos[i][j]);
    out += "\n";
  }
  out += "leaf_order";
  for (int leaf : m.leaf_order) out += "," + m.names[leaf];
  out += "\n";
  return out;
}

inline std::string curve_to_csv(const std::vector<CurveRow>& curve) {
  std::string out = "step,train_loss,val_loss,val_accuracy,lr\n";
  for (const CurveRow& r : curve) {
    out += std::to_string(r.step) + "," + format_double(r.train_loss) + "," +
           format_double(r.val_loss) + "," + format_double(r.val_accuracy) + "," +
           format_double(r.lr) + "\n";
  }
  return out;
}

}  // namespace stylox
