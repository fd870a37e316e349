// stylox: symbolic-music accompaniment style translation workbench.
//
// Subcommands: gen (build the paired corpus), train, translate, eval,
// profile, export-embeddings. Everything is seeded and reproducible; see
// README.md and docs/ for formats.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stylox/arranger.hpp"
#include "stylox/checkpoint.hpp"
#include "stylox/config.hpp"
#include "stylox/corpus.hpp"
#include "stylox/eval.hpp"
#include "stylox/metrics.hpp"
#include "stylox/midi_io.hpp"
#include "stylox/train.hpp"

namespace fs = std::filesystem;
using namespace stylox;

namespace {

void write_file(const std::string& path, const std::string& content) {
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

std::vector<uint8_t> read_binary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  return std::vector<uint8_t>((std::istreambuf_iterator<char>(f)),
                              std::istreambuf_iterator<char>());
}

struct GlobalFlags {
  int jobs = 1;
  bool seed_set = false;
  uint64_t seed = 0;
};

// --- gen ---

int cmd_gen(const std::string& config_path, const std::string& out_override,
            const GlobalFlags& g) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (!out_override.empty()) cfg.corpus.out_dir = out_override;
  if (g.seed_set) cfg.corpus.options.seed = g.seed;
  if (cfg.corpus.charts_dir.empty()) throw ConfigError("config has no corpus.charts_dir");

  std::vector<std::string> failures;
  auto charts = load_charts_dir(cfg.corpus.charts_dir, &failures);
  for (const std::string& f : failures) std::fprintf(stderr, "chart error: %s\n", f.c_str());
  if (charts.empty()) throw ConfigError("no parsable charts in " + cfg.corpus.charts_dir);

  auto styles = resolve_styles(cfg.corpus);
  PairedCorpus corpus = build_corpus(charts, styles, cfg.corpus.options);
  for (const std::string& w : corpus.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  save_corpus(corpus, cfg.corpus.out_dir);

  int64_t segments = 0;
  for (const auto& [song, w] : corpus.windows_per_song) segments += w;
  std::printf("charts: %zu (%zu failed)\n", charts.size(), failures.size());
  std::printf("styles: %zu, k=%d, renders_per_style=%d\n", styles.size(),
              cfg.corpus.options.k_styles_per_song, cfg.corpus.options.renders_per_style);
  std::printf("segments: %lld\n", static_cast<long long>(segments));
  std::printf("pairs: %zu\n", corpus.examples.size());
  std::printf("manifest_hash: %016llx\n",
              static_cast<unsigned long long>(manifest_hash(corpus)));
  std::printf("corpus written to %s\n", cfg.corpus.out_dir.c_str());
  return 0;
}

// --- train ---

int cmd_train(const std::string& config_path, const std::string& pair_arg,
              const std::string& resume_path, const GlobalFlags& g) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (g.seed_set) cfg.train.params.seed = g.seed;

  PairedCorpus corpus = load_corpus(cfg.train.corpus_dir);
  StyleRegistry registry = registry_of(corpus);
  TrackPair tp = track_pair_from_name(cfg.track_pair);

  PairFilter filter;
  std::string pair = pair_arg.empty() ? cfg.train.pair : pair_arg;
  if (!pair.empty()) {
    auto colon = pair.find(':');
    if (colon == std::string::npos)
      throw ConfigError("--pair must look like SOURCE_STYLE:TARGET_STYLE");
    filter.active = true;
    filter.source_style = pair.substr(0, colon);
    filter.target_style = pair.substr(colon + 1);
    registry.id_of(filter.source_style);  // validate against the corpus styles
    registry.id_of(filter.target_style);
    cfg.model.num_styles = 0;  // single direction: no style conditioning
  } else {
    cfg.model.num_styles = registry.size();
  }

  auto train_ex = make_examples(corpus, tp, cfg.model.variant, Split::train, registry, filter);
  auto val_ex =
      make_examples(corpus, tp, cfg.model.variant, Split::validation, registry, filter);
  if (train_ex.empty()) throw ConfigError("corpus has no training examples for this setup");
  std::printf("examples: %zu train, %zu validation\n", train_ex.size(), val_ex.size());

  ParamStore params;
  int64_t prior_steps = 0;
  if (!resume_path.empty()) {
    Checkpoint prev = load_checkpoint(resume_path);
    params = std::move(prev.params);
    prior_steps = prev.step;
    std::printf("resuming from %s at step %lld\n", resume_path.c_str(),
                static_cast<long long>(prior_steps));
  } else {
    Rng init_rng(cfg.train.params.seed, 0x1417);
    params = init_params(cfg.model, init_rng);
  }

  TrainResult result = train_model(cfg.model, std::move(params), train_ex, val_ex,
                                   cfg.train.params, [](const CurveRow& row) {
                                     std::printf(
                                         "step %6lld  train %.4f  val %.4f  acc %.3f  lr %.2e\n",
                                         static_cast<long long>(row.step), row.train_loss,
                                         row.val_loss, row.val_accuracy, row.lr);
                                     std::fflush(stdout);
                                   });
  if (result.diverged) std::fprintf(stderr, "training diverged; keeping best checkpoint\n");

  Checkpoint ckpt;
  ckpt.config = cfg.model;
  ckpt.styles = registry;
  ckpt.params = std::move(result.params);
  ckpt.step = prior_steps + result.steps;
  ckpt.has_optimizer_state = true;
  ckpt.meta = {{"track_pair", cfg.track_pair},
               {"pair_mode", pair},
               {"corpus_seed", corpus.seed},
               {"train_seed", cfg.train.params.seed},
               {"best_val_loss", result.best_val_loss}};
  if (fs::path(cfg.train.checkpoint_path).has_parent_path())
    fs::create_directories(fs::path(cfg.train.checkpoint_path).parent_path());
  save_checkpoint(cfg.train.checkpoint_path, ckpt);
  std::printf("checkpoint written to %s (%lld steps, best val %.4f)\n",
              cfg.train.checkpoint_path.c_str(), static_cast<long long>(ckpt.step),
              result.best_val_loss);
  if (!cfg.train.curve_path.empty()) write_file(cfg.train.curve_path, curve_to_csv(result.curve));
  return result.diverged ? 1 : 0;
}

// --- translate ---

struct SongTranslation {
  NoteList track;
  int anomalies = 0;
  int segments = 0;
};

SongTranslation translate_song(const Checkpoint& ckpt, const Song& song, const TrackPair& tp,
                               int style_id, int jobs) {
  NoteList input = extract_track(song, tp.input);
  SongTranslation out;
  out.track.time_signature = song.time_signature;
  auto segs = segment(input);
  out.segments = static_cast<int>(segs.size());
  std::vector<TranslateResult> results(segs.size());
  parallel_for(segs.size(), jobs, [&](size_t w) {
    TrainExample in;
    if (ckpt.config.variant == ModelVariant::roll2seq)
      in.roll = to_piano_roll(segs[w]);
    else
      in.src_ids = tokenize(encode_events(segs[w], tp.input == TrackSelector::piano));
    results[w] = translate_segment(ckpt.params, ckpt.config, in, style_id);
  });
  for (size_t w = 0; w < segs.size(); ++w) {
    out.anomalies += results[w].decode_anomalies;
    for (const Note& n : results[w].segment.notes.notes) {
      out.track.notes.push_back(
          {n.pitch, n.onset + 32.0 * static_cast<double>(w), n.offset + 32.0 * static_cast<double>(w)});
    }
  }
  out.track.sort();
  return out;
}

int cmd_translate(const std::string& ckpt_path, const std::string& input_path,
                  const std::string& style_arg, const std::string& track_arg,
                  const std::string& out_path, const GlobalFlags& g) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  TrackPair tp = track_pair_from_name(ckpt.meta.at("track_pair").get<std::string>());
  if (!track_arg.empty()) tp.input = selector_from_name(track_arg);

  std::vector<std::string> warnings;
  Song song = read_midi(read_binary(input_path), &warnings);
  for (const std::string& w : warnings) std::fprintf(stderr, "midi warning: %s\n", w.c_str());
  if (extract_track(song, tp.input).notes.empty())
    std::fprintf(stderr, "warning: input has no notes for selector '%s'\n",
                 selector_name(tp.input).c_str());

  StyleRegistry registry;
  registry.styles = ckpt.styles.styles;

  std::vector<std::pair<std::string, int>> targets;
  if (!ckpt.config.conditioned()) {
    std::string pair = ckpt.meta.value("pair_mode", "");
    targets.push_back({pair.empty() ? "output" : pair.substr(pair.find(':') + 1), 0});
  } else if (style_arg == "all") {
    for (int i = 0; i < registry.size(); ++i) targets.push_back({registry.styles[i].first, i});
  } else {
    try {
      targets.push_back({style_arg, registry.id_of(style_arg)});
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }

  for (const auto& [style_name, style_id] : targets) {
    SongTranslation tr = translate_song(ckpt, song, tp, style_id, g.jobs);
    Song out_song;
    out_song.time_signature = song.time_signature;
    tr.track.time_signature = song.time_signature;
    out_song.tracks[tp.output] = tr.track;

    std::string path = out_path;
    if (targets.size() > 1) {
      fs::create_directories(out_path);
      path = (fs::path(out_path) / (fs::path(input_path).stem().string() + "__" + style_name +
                                    ".mid")).string();
    }
    auto bytes = write_midi(out_song);
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    std::printf("%s: %d segments, %zu notes, %d decode anomalies -> %s\n", style_name.c_str(),
                tr.segments, tr.track.notes.size(), tr.anomalies, path.c_str());
  }
  return 0;
}

// --- eval ---

int cmd_eval(const std::string& ckpt_path, const std::string& corpus_dir, bool baselines,
             const std::string& out_path, const std::string& split_arg,
             const std::string& outputs_dir, const std::string& track_pair_arg,
             const std::string& label, const GlobalFlags& g) {
  PairedCorpus corpus = load_corpus(corpus_dir);
  EvalOptions opts;
  opts.baselines = baselines;
  opts.jobs = g.jobs;
  opts.split = split_from_name(split_arg);
  opts.model_label = label;
  if (g.seed_set) opts.random_seed = g.seed;

  std::vector<EvalRow> rows;
  if (!outputs_dir.empty()) {
    // Precomputed outputs: renders/<song>__seg<k>__<src>__to__<tgt>.mid
    TrackPair tp = track_pair_from_name(track_pair_arg);
    TrackSelector out_sel = tp.output == Role::bass ? TrackSelector::bass : TrackSelector::piano;
    auto refs = reference_profiles(corpus, tp.output, Split::train);
    std::vector<TranslatedSegment> outputs;
    int missing = 0;
    for (const PairExample& ex : corpus.examples) {
      if (ex.split != opts.split) continue;
      std::string name = ex.song_id + "__seg" + std::to_string(ex.segment_index) + "__" +
                         ex.source_style + "__to__" + ex.target_style + ".mid";
      fs::path path = fs::path(outputs_dir) / name;
      if (!fs::exists(path)) {
        std::fprintf(stderr, "missing output %s (excluded)\n", name.c_str());
        ++missing;
        continue;
      }
      Song out_song = read_midi(read_binary(path.string()));
      int windows = corpus.windows_per_song.at(ex.song_id);
      TranslatedSegment t;
      t.song_id = ex.song_id;
      t.segment_index = ex.segment_index;
      t.target_style = ex.target_style;
      auto segs = segment(extract_track(out_song, out_sel), 1);
      t.output = segs.empty() ? Segment{} : segs[0];
      t.source = segment_of_render(
          corpus.render_for({ex.song_id, ex.source_style, ex.source_render}), out_sel,
          ex.segment_index, windows);
      t.reference = segment_of_render(
          corpus.render_for({ex.song_id, ex.target_style, ex.target_render}), out_sel,
          ex.segment_index, windows);
      outputs.push_back(std::move(t));
    }
    if (missing) std::fprintf(stderr, "%d outputs missing\n", missing);
    rows = evaluate_outputs(outputs, refs, role_name(tp.output), opts);
  } else {
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    rows = evaluate_checkpoint(corpus, ckpt, opts);
  }

  std::string csv = report_to_csv(rows);
  write_file(out_path, csv);
  std::fputs(csv.c_str(), stdout);
  std::printf("report written to %s\n", out_path.c_str());
  return 0;
}

// --- profile ---

int cmd_profile(const std::vector<std::string>& inputs, const std::string& corpus_dir,
                const std::string& track_arg, const std::string& out_path) {
  std::vector<std::pair<std::string, StyleProfile>> profiles;
  if (!corpus_dir.empty()) {
    PairedCorpus corpus = load_corpus(corpus_dir);
    Role role = track_arg == "piano" ? Role::piano : Role::bass;
    for (auto& [style, profile] : reference_profiles(corpus, role, Split::train))
      profiles.push_back({style, profile});
  } else {
    TrackSelector sel = selector_from_name(track_arg.empty() ? "all" : track_arg);
    for (const std::string& path : inputs) {
      Song song = read_midi(read_binary(path));
      ProfileAccumulator acc;
      for (const Segment& s : segment(extract_track(song, sel))) acc.add(s);
      profiles.push_back({fs::path(path).stem().string(), acc.profile()});
    }
  }
  if (profiles.empty()) throw ConfigError("profile: no inputs");

  std::string csv;
  if (profiles.size() == 1) {
    csv = "name";
    for (int i = 0; i < kProfileSize; ++i) csv += ",b" + std::to_string(i);
    csv += "\n" + profiles[0].first;
    for (double v : profiles[0].second.v) csv += "," + format_double(v);
    csv += "\n";
  } else {
    csv = matrix_to_csv(profile_similarity_matrix(profiles));
  }
  write_file(out_path, csv);
  std::fputs(csv.c_str(), stdout);
  return 0;
}

// --- export-embeddings ---

int cmd_export_embeddings(const std::string& ckpt_path, const std::string& out_path) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  StyleRegistry registry;
  registry.styles = ckpt.styles.styles;
  auto rows = export_style_embeddings(ckpt.params, registry);
  std::string csv = "style,feel";
  for (size_t d = 0; d < rows[0].vector.size(); ++d) csv += ",e" + std::to_string(d);
  csv += "\n";
  for (const auto& row : rows) {
    csv += row.name + "," + row.feel;
    for (float v : row.vector) csv += "," + format_double(v);
    csv += "\n";
  }
  write_file(out_path, csv);
  std::printf("%zu embeddings written to %s\n", rows.size(), out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stylox: symbolic-music accompaniment style translation workbench"};
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--jobs", g.jobs, "worker threads for gen/translate/eval")->default_val(1);
  uint64_t seed_opt = 0;
  auto* seed_flag = app.add_option("--seed", seed_opt, "override the configured seed");

  std::string config_path, out_override;
  auto* gen = app.add_subcommand("gen", "generate the aligned paired corpus");
  gen->add_option("--config", config_path, "experiment config JSON")->required();
  gen->add_option("--out", out_override, "override corpus output directory");

  std::string pair_arg, resume_path;
  auto* train = app.add_subcommand("train", "train a style translation model");
  train->add_option("--config", config_path, "experiment config JSON")->required();
  train->add_option("--pair", pair_arg, "restrict to one SOURCE:TARGET style pair (1->1 mode)");
  train->add_option("--resume", resume_path, "checkpoint to continue from");

  std::string ckpt_path, input_path, style_arg = "all", track_arg, out_path = "out.mid";
  auto* translate = app.add_subcommand("translate", "translate a MIDI file to a target style");
  translate->add_option("--ckpt", ckpt_path, "trained checkpoint")->required();
  translate->add_option("input", input_path, "input MIDI file")->required();
  translate->add_option("--style", style_arg, "target style name, or 'all'");
  translate->add_option("--track", track_arg, "input track selector (bass|piano|all)");
  translate->add_option("-o,--out", out_path, "output MIDI file (directory for --style all)");

  std::string corpus_dir, split_arg = "test", outputs_dir, tp_arg = "all->bass",
              label = "model", report_path = "report.csv";
  bool no_baselines = false;
  auto* eval = app.add_subcommand("eval", "score translations against the corpus");
  eval->add_option("--ckpt", ckpt_path, "trained checkpoint");
  eval->add_option("--corpus", corpus_dir, "corpus directory")->required();
  eval->add_flag("--no-baselines", no_baselines, "skip source/reference/random baselines");
  eval->add_option("--split", split_arg, "corpus split to evaluate");
  eval->add_option("--outputs", outputs_dir, "directory of precomputed output MIDI files");
  eval->add_option("--track-pair", tp_arg, "track pair for --outputs mode");
  eval->add_option("--label", label, "model label for report rows");
  eval->add_option("-o,--out", report_path, "report CSV path");

  std::vector<std::string> profile_inputs;
  std::string profile_corpus, profile_track, profile_out = "profiles.csv";
  auto* profile = app.add_subcommand("profile", "style profiles and similarity matrix");
  profile->add_option("inputs", profile_inputs, "MIDI files");
  profile->add_option("--corpus", profile_corpus, "corpus directory (per-style profiles)");
  profile->add_option("--track", profile_track, "track selector / role");
  profile->add_option("-o,--out", profile_out, "output CSV path");

  std::string emb_out = "embeddings.csv";
  auto* exp = app.add_subcommand("export-embeddings", "dump the learned style embedding table");
  exp->add_option("--ckpt", ckpt_path, "trained checkpoint")->required();
  exp->add_option("-o,--out", emb_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);
  if (!seed_flag->empty()) {
    g.seed_set = true;
    g.seed = seed_opt;
  }

  try {
    if (gen->parsed()) return cmd_gen(config_path, out_override, g);
    if (train->parsed()) return cmd_train(config_path, pair_arg, resume_path, g);
    if (translate->parsed())
      return cmd_translate(ckpt_path, input_path, style_arg, track_arg, out_path, g);
    if (eval->parsed())
      return cmd_eval(ckpt_path, corpus_dir, !no_baselines, report_path, split_arg, outputs_dir,
                      tp_arg, label, g);
    if (profile->parsed())
      return cmd_profile(profile_inputs, profile_corpus, profile_track, profile_out);
    if (exp->parsed()) return cmd_export_embeddings(ckpt_path, emb_out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
