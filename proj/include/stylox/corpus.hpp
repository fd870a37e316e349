// Aligned paired-corpus construction: render each chart in k sampled styles,
// segment every render identically, and emit one example per ordered
// (style, render) pair per segment. Splits are disjoint by song.
//
// On disk: renders/<song>__<style>__r<idx>.json plus manifest.ndjson (one
// JSON record per example) and corpus.json (styles, splits, settings).

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylox/arranger.hpp"
#include "stylox/chart.hpp"
#include "stylox/codec.hpp"
#include "stylox/midi_io.hpp"
#include "stylox/model.hpp"

namespace stylox {

struct SplitSpec {
  int train = 0;  // song counts; <= 0 means "all remaining" for train only
  int validation = 0;
  int test = 0;
};

enum class Split { train, validation, test };

inline std::string split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "train";
}

inline Split split_from_name(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split: " + s);
}

struct RenderKey {
  std::string song_id;
  std::string style;
  int render_index = 0;

  auto operator<=>(const RenderKey&) const = default;
  std::string file_stem() const {
    return song_id + "__" + style + "__r" + std::to_string(render_index);
  }
};

struct PairExample {
  std::string song_id;
  int segment_index = 0;
  std::string source_style;
  int source_render = 0;
  std::string target_style;
  int target_render = 0;
  Split split = Split::train;
};

struct PairedCorpus {
  std::vector<std::string> style_names;          // styles actually used
  std::map<std::string, std::string> style_feel; // name -> feel label
  std::map<RenderKey, Song> renders;
  std::map<std::string, int> windows_per_song;   // chart-derived segment count
  std::vector<PairExample> examples;
  std::map<std::string, Split> song_split;
  std::vector<std::string> warnings;
  uint64_t seed = 0;

  const Song& render_for(const RenderKey& key) const {
    auto it = renders.find(key);
    if (it == renders.end())
      throw std::runtime_error("corpus is missing render " + key.file_stem());
    return it->second;
  }

  std::vector<std::string> songs_in(Split s) const {
    std::vector<std::string> out;
    for (const auto& [song, sp] : song_split)
      if (sp == s) out.push_back(song);
    return out;
  }
};

struct CorpusOptions {
  int k_styles_per_song = 3;
  int renders_per_style = 1;
  uint64_t seed = 1;
  SplitSpec split;  // all-zero -> everything lands in train
};

/// Build the aligned corpus from parsed charts. For every segment of every
/// song, each ordered pair of the song's k sampled styles contributes
/// renders_per_style^2 examples (k*(k-1) per segment at one render each).
/// Fully silent segments are skipped with a warning.
inline PairedCorpus build_corpus(const std::vector<std::pair<std::string, ChordChart>>& charts,
                                 const std::vector<StyleSpec>& styles, const CorpusOptions& opts) {
  if (opts.k_styles_per_song > static_cast<int>(styles.size()))
    throw ConfigError("k_styles_per_song (" + std::to_string(opts.k_styles_per_song) +
                      ") exceeds style count (" + std::to_string(styles.size()) + ")");
  if (opts.k_styles_per_song < 1 || opts.renders_per_style < 1)
    throw ConfigError("k_styles_per_song and renders_per_style must be >= 1");

  PairedCorpus corpus;
  corpus.seed = opts.seed;
  for (const StyleSpec& s : styles) {
    corpus.style_names.push_back(s.name);
    corpus.style_feel[s.name] = feel_name(s.feel);
  }

  // Deterministic song order regardless of input order.
  std::vector<std::pair<std::string, const ChordChart*>> songs;
  for (const auto& [id, chart] : charts) songs.push_back({id, &chart});
  std::sort(songs.begin(), songs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (size_t i = 1; i < songs.size(); ++i)
    if (songs[i].first == songs[i - 1].first)
      throw ConfigError("duplicate song id: " + songs[i].first);

  // Split assignment by song.
  {
    std::vector<std::string> ids;
    for (const auto& [id, chart] : songs) ids.push_back(id);
    Rng split_rng(opts.seed, 0x5117);
    split_rng.shuffle(ids);
    int n = static_cast<int>(ids.size());
    int n_val = std::min(opts.split.validation, n);
    int n_test = std::min(opts.split.test, std::max(0, n - n_val));
    for (int i = 0; i < n; ++i) {
      Split sp = i < n_val                ? Split::validation
                 : i < n_val + n_test     ? Split::test
                                          : Split::train;
      corpus.song_split[ids[i]] = sp;
    }
  }

  Rng style_rng(opts.seed, 0x57e1e5);
  for (const auto& [song_id, chart] : songs) {
    // Sample k styles without replacement.
    std::vector<int> pool(styles.size());
    for (size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<int>(i);
    style_rng.shuffle(pool);
    std::vector<int> picked(pool.begin(), pool.begin() + opts.k_styles_per_song);

    int windows = window_count_for_bars(chart->bar_count());
    corpus.windows_per_song[song_id] = windows;

    struct SegmentedRender {
      RenderKey key;
      std::map<Role, std::vector<Segment>> segments;
      std::vector<bool> silent;  // per window: every role empty
    };
    std::vector<SegmentedRender> rendered;
    for (int si : picked) {
      const StyleSpec& style = styles[si];
      for (int r = 0; r < opts.renders_per_style; ++r) {
        RenderKey key{song_id, style.name, r};
        uint64_t render_seed = opts.seed ^ (arr_detail::fnv1a(key.file_stem()) | 1);
        Song song = render_song(*chart, style, render_seed);
        SegmentedRender sr;
        sr.key = key;
        sr.silent.assign(windows, true);
        for (const auto& [role, track] : song.tracks) {
          auto segs = segment(track, windows);
          for (int w = 0; w < windows; ++w)
            if (!segs[w].empty()) sr.silent[w] = false;
          sr.segments[role] = std::move(segs);
        }
        rendered.push_back(std::move(sr));
        corpus.renders.emplace(key, std::move(song));
      }
    }

    Split sp = corpus.song_split.at(song_id);
    for (int w = 0; w < windows; ++w) {
      for (const SegmentedRender& src : rendered) {
        for (const SegmentedRender& tgt : rendered) {
          if (src.key.style == tgt.key.style) continue;
          if (src.silent[w] || tgt.silent[w]) {
            corpus.warnings.push_back("skipped silent segment " + song_id + " window " +
                                      std::to_string(w) + " (" + src.key.style + "->" +
                                      tgt.key.style + ")");
            continue;
          }
          corpus.examples.push_back({song_id, w, src.key.style, src.key.render_index,
                                     tgt.key.style, tgt.key.render_index, sp});
        }
      }
    }
  }
  return corpus;
}

// --- training-example materialization ---

struct TrackPair {
  TrackSelector input = TrackSelector::all;
  Role output = Role::bass;
};

inline std::string track_pair_name(const TrackPair& tp) {
  return selector_name(tp.input) + "->" + role_name(tp.output);
}

inline TrackPair track_pair_from_name(const std::string& s) {
  auto arrow = s.find("->");
  if (arrow == std::string::npos)
    throw std::invalid_argument("track pair must look like 'all->bass': " + s);
  TrackPair tp;
  tp.input = selector_from_name(s.substr(0, arrow));
  std::string out = s.substr(arrow + 2);
  if (out == "bass")
    tp.output = Role::bass;
  else if (out == "piano")
    tp.output = Role::piano;
  else
    throw std::invalid_argument("output track must be bass or piano: " + s);
  if (tp.input != TrackSelector::all &&
      selector_name(tp.input) != role_name(tp.output))
    throw std::invalid_argument("track pair must be X->X or all->X: " + s);
  return tp;
}

inline Segment segment_of_render(const Song& song, TrackSelector selector, int window,
                                 int windows) {
  NoteList track = extract_track(song, selector);
  auto segs = segment(track, windows);
  return segs[window];
}

/// Restriction of the corpus to one ordered style pair (1->1 training mode).
struct PairFilter {
  std::string source_style;
  std::string target_style;
  bool active = false;
};

/// Materialize model inputs/targets for a split. The target track's event
/// sequence uses NoteOff(All) compression only for piano.
inline std::vector<TrainExample> make_examples(const PairedCorpus& corpus, const TrackPair& tp,
                                               ModelVariant variant, Split split,
                                               const StyleRegistry& registry,
                                               const PairFilter& filter = {}) {
  std::vector<TrainExample> out;
  int64_t id = 0;
  for (const PairExample& ex : corpus.examples) {
    ++id;
    if (ex.split != split) continue;
    if (filter.active &&
        (ex.source_style != filter.source_style || ex.target_style != filter.target_style))
      continue;
    int windows = corpus.windows_per_song.at(ex.song_id);
    const Song& src_song = corpus.render_for({ex.song_id, ex.source_style, ex.source_render});
    const Song& tgt_song = corpus.render_for({ex.song_id, ex.target_style, ex.target_render});

    Segment src = segment_of_render(src_song, tp.input, ex.segment_index, windows);
    Segment tgt = segment_of_render(
        tgt_song, tp.output == Role::bass ? TrackSelector::bass : TrackSelector::piano,
        ex.segment_index, windows);
    if (tgt.empty() || src.empty()) continue;

    TrainExample te;
    te.id = id;
    if (variant == ModelVariant::roll2seq)
      te.roll = to_piano_roll(src);
    else
      te.src_ids = tokenize(encode_events(src, /*compress_offs=*/tp.input == TrackSelector::piano));
    te.tgt_ids = tokenize(encode_events(tgt, /*compress_offs=*/tp.output == Role::piano));
    te.style_id = registry.size() ? registry.id_of(ex.target_style) : 0;
    out.push_back(std::move(te));
  }
  return out;
}

inline StyleRegistry registry_of(const PairedCorpus& corpus) {
  StyleRegistry reg;
  for (const std::string& name : corpus.style_names)
    reg.styles.push_back({name, corpus.style_feel.at(name)});
  return reg;
}

// --- on-disk format ---

namespace corpus_detail {

inline nlohmann::ordered_json song_to_json(const Song& song) {
  nlohmann::ordered_json j;
  j["time_signature"] = time_signature_name(song.time_signature);
  nlohmann::ordered_json tracks;
  for (const auto& [role, track] : song.tracks) {
    nlohmann::ordered_json notes = nlohmann::ordered_json::array();
    for (const Note& n : track.notes) {
      // Times as integer twelfths: exact and compact.
      notes.push_back({n.pitch, static_cast<int64_t>(std::llround(n.onset * 12)),
                       static_cast<int64_t>(std::llround(n.offset * 12))});
    }
    tracks[role_name(role)] = notes;
  }
  j["tracks"] = tracks;
  return j;
}

inline Song song_from_json(const nlohmann::json& j) {
  Song song;
  song.time_signature = j.at("time_signature").get<std::string>() == "12/8"
                            ? TimeSignature::twelve_eight
                            : TimeSignature::four_four;
  for (const auto& [role_str, notes] : j.at("tracks").items()) {
    NoteList track;
    track.time_signature = song.time_signature;
    for (const auto& n : notes)
      track.notes.push_back({n.at(0).get<int>(), n.at(1).get<int64_t>() / 12.0,
                             n.at(2).get<int64_t>() / 12.0});
    song.tracks[role_from_name(role_str)] = std::move(track);
  }
  return song;
}

}  // namespace corpus_detail

/// Write renders, manifest.ndjson (one example per line), and corpus.json.
inline void save_corpus(const PairedCorpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "renders");

  for (const auto& [key, song] : corpus.renders) {
    std::ofstream f(fs::path(dir) / "renders" / (key.file_stem() + ".json"));
    f << corpus_detail::song_to_json(song).dump() << "\n";
  }

  std::ofstream manifest(fs::path(dir) / "manifest.ndjson");
  for (const PairExample& ex : corpus.examples) {
    nlohmann::ordered_json j = {
        {"song", ex.song_id},
        {"segment", ex.segment_index},
        {"source_style", ex.source_style},
        {"source_render", ex.source_render},
        {"target_style", ex.target_style},
        {"target_render", ex.target_render},
        {"split", split_name(ex.split)},
        {"source_file", "renders/" + RenderKey{ex.song_id, ex.source_style, ex.source_render}.file_stem() + ".json"},
        {"target_file", "renders/" + RenderKey{ex.song_id, ex.target_style, ex.target_render}.file_stem() + ".json"},
    };
    manifest << j.dump() << "\n";
  }

  nlohmann::ordered_json meta;
  meta["seed"] = corpus.seed;
  nlohmann::ordered_json styles = nlohmann::ordered_json::array();
  for (const std::string& name : corpus.style_names)
    styles.push_back({name, corpus.style_feel.at(name)});
  meta["styles"] = styles;
  nlohmann::ordered_json windows;
  for (const auto& [song, n] : corpus.windows_per_song) windows[song] = n;
  meta["windows_per_song"] = windows;
  nlohmann::ordered_json splits;
  for (const auto& [song, sp] : corpus.song_split) splits[song] = split_name(sp);
  meta["song_split"] = splits;
  std::ofstream mf(fs::path(dir) / "corpus.json");
  mf << meta.dump(2) << "\n";
}

inline PairedCorpus load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  PairedCorpus corpus;

  std::ifstream mf(fs::path(dir) / "corpus.json");
  if (!mf) throw std::runtime_error("not a corpus directory (missing corpus.json): " + dir);
  nlohmann::json meta = nlohmann::json::parse(mf);
  corpus.seed = meta.value("seed", 0);
  for (const auto& s : meta.at("styles")) {
    corpus.style_names.push_back(s.at(0).get<std::string>());
    corpus.style_feel[s.at(0).get<std::string>()] = s.at(1).get<std::string>();
  }
  for (const auto& [song, n] : meta.at("windows_per_song").items())
    corpus.windows_per_song[song] = n.get<int>();
  for (const auto& [song, sp] : meta.at("song_split").items())
    corpus.song_split[song] = split_from_name(sp.get<std::string>());

  std::ifstream manifest(fs::path(dir) / "manifest.ndjson");
  if (!manifest) throw std::runtime_error("missing manifest.ndjson in " + dir);
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    PairExample ex;
    ex.song_id = j.at("song").get<std::string>();
    ex.segment_index = j.at("segment").get<int>();
    ex.source_style = j.at("source_style").get<std::string>();
    ex.source_render = j.at("source_render").get<int>();
    ex.target_style = j.at("target_style").get<std::string>();
    ex.target_render = j.at("target_render").get<int>();
    ex.split = split_from_name(j.at("split").get<std::string>());
    corpus.examples.push_back(std::move(ex));
  }

  for (const auto& entry : fs::directory_iterator(fs::path(dir) / "renders")) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream rf(entry.path());
    nlohmann::json j = nlohmann::json::parse(rf);
    std::string stem = entry.path().stem().string();
    auto r_at = stem.rfind("__r");
    auto s_at = stem.rfind("__", r_at - 1);
    if (r_at == std::string::npos || s_at == std::string::npos)
      throw std::runtime_error("malformed render filename: " + stem);
    RenderKey key;
    key.song_id = stem.substr(0, s_at);
    key.style = stem.substr(s_at + 2, r_at - s_at - 2);
    key.render_index = std::stoi(stem.substr(r_at + 3));
    corpus.renders.emplace(key, corpus_detail::song_from_json(j));
  }
  return corpus;
}

/// Stable FNV-1a hash of the serialized manifest records, for reproducibility
/// checks.
inline uint64_t manifest_hash(const PairedCorpus& corpus) {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&](const std::string& s) {
    for (char c : s) {
      h ^= static_cast<uint8_t>(c);
      h *= 1099511628211ull;
    }
  };
  for (const PairExample& ex : corpus.examples) {
    mix(ex.song_id);
    mix(std::to_string(ex.segment_index));
    mix(ex.source_style);
    mix(std::to_string(ex.source_render));
    mix(ex.target_style);
    mix(std::to_string(ex.target_render));
    mix(split_name(ex.split));
  }
  return h;
}

}  // namespace stylox
