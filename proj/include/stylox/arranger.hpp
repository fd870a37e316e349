// Rule-based accompaniment arranger: renders chord charts into bass and
// piano tracks in a named style, with per-bar pattern variation.
//
// Styles come in families (jazz / rock / country) that share feel and
// related patterns, so style profiles cluster by family. StyleSpec JSON
// schema is documented in docs/stylespec.md.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "stylox/chart.hpp"
#include "stylox/note.hpp"
#include "stylox/rng.hpp"

#include <json.hpp>

namespace stylox {

enum class Feel { even, swing };

inline std::string feel_name(Feel f) { return f == Feel::even ? "even" : "swing"; }
inline Feel feel_from_name(const std::string& s) {
  if (s == "even") return Feel::even;
  if (s == "swing") return Feel::swing;
  throw std::invalid_argument("unknown feel: " + s);
}

/// Chord-tone selector a pattern event resolves through.
enum class Degree { root, third, fifth, seventh, bass_octave, full_chord, approach };

inline std::string degree_name(Degree d) {
  switch (d) {
    case Degree::root: return "root";
    case Degree::third: return "third";
    case Degree::fifth: return "fifth";
    case Degree::seventh: return "seventh";
    case Degree::bass_octave: return "bass-octave";
    case Degree::full_chord: return "full-chord";
    case Degree::approach: return "approach";
  }
  return "root";
}

inline Degree degree_from_name(const std::string& s) {
  for (Degree d : {Degree::root, Degree::third, Degree::fifth, Degree::seventh,
                   Degree::bass_octave, Degree::full_chord, Degree::approach})
    if (degree_name(d) == s) return d;
  throw std::invalid_argument("unknown degree: " + s);
}

struct PatternEvent {
  int onset = 0;     // twelfths from pattern start
  int duration = 0;  // twelfths, > 0
  Degree degree = Degree::root;
  int octave = 3;  // scientific pitch octave; C4 = MIDI 60
};

struct Pattern {
  int length_bars = 1;  // 1 or 2
  std::vector<PatternEvent> events;
};

/// A role's pattern alternatives with selection probabilities (sum to 1).
/// The first variant is the primary pattern.
struct RolePatterns {
  std::vector<Pattern> variants;
  std::vector<double> probs;
};

struct StyleSpec {
  std::string name;
  Feel feel = Feel::even;
  std::map<Role, RolePatterns> tracks;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void validate(const StyleSpec& style) {
  if (style.name.empty()) throw ConfigError("style with empty name");
  if (!style.tracks.count(Role::bass) || !style.tracks.count(Role::piano))
    throw ConfigError("style '" + style.name + "' must define bass and piano patterns");
  for (const auto& [role, rp] : style.tracks) {
    if (rp.variants.empty() || rp.variants.size() != rp.probs.size())
      throw ConfigError("style '" + style.name + "': malformed variants for " + role_name(role));
    double sum = 0;
    for (double p : rp.probs) {
      if (p < 0) throw ConfigError("style '" + style.name + "': negative variant probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ConfigError("style '" + style.name + "': variant probabilities sum to " +
                        std::to_string(sum) + ", expected 1");
    for (const Pattern& p : rp.variants) {
      if (p.length_bars != 1 && p.length_bars != 2)
        throw ConfigError("style '" + style.name + "': pattern length must be 1 or 2 bars");
      for (const PatternEvent& e : p.events) {
        if (e.onset < 0 || e.onset >= p.length_bars * kTwelfthsPerBar)
          throw ConfigError("style '" + style.name + "': pattern onset out of range");
        if (e.duration <= 0)
          throw ConfigError("style '" + style.name + "': non-positive event duration");
      }
    }
  }
}

namespace arr_detail {

inline uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<uint8_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

// MIDI pitch of a pitch class in a given octave (C4 = 60).
inline int pitch_in_octave(int pitch_class, int octave) {
  int p = 12 * (octave + 1) + pitch_class;
  while (p > 127) p -= 12;
  while (p < 0) p += 12;
  return p;
}

inline void resolve_degree(const ChordSymbol& chord, const ChordSymbol& next_chord,
                           const PatternEvent& ev, std::vector<int>& pitches_out) {
  const auto& ivs = chord_intervals(chord.quality);
  int base = 12 * (ev.octave + 1) + chord.root;
  auto place = [&](int interval) { pitches_out.push_back(base + interval); };
  switch (ev.degree) {
    case Degree::root: place(0); break;
    case Degree::third: place(ivs[1]); break;
    case Degree::fifth: place(ivs[2]); break;
    case Degree::seventh: place(ivs.size() >= 4 ? ivs[3] : 0); break;
    case Degree::bass_octave: place(12); break;
    case Degree::full_chord:
      for (int iv : ivs) place(iv);
      break;
    case Degree::approach:
      // Chromatic approach from below into the next bar's root.
      pitches_out.push_back(12 * (ev.octave + 1) + next_chord.root - 1);
      break;
  }
  for (int& p : pitches_out) {
    while (p > 127) p -= 12;
    while (p < 0) p += 12;
  }
}

}  // namespace arr_detail

/// Render one role of a chart in a style. Pure function of its arguments:
/// the same (chart, style, role, seed) always yields the same NoteList.
/// All onsets/offsets land on the 12ths-of-a-beat grid.
inline NoteList render(const ChordChart& chart, const StyleSpec& style, Role role,
                       uint64_t seed) {
  auto it = style.tracks.find(role);
  if (it == style.tracks.end())
    throw ConfigError("style '" + style.name + "' has no pattern for role " + role_name(role));
  const RolePatterns& rp = it->second;

  Rng rng(seed, arr_detail::fnv1a(style.name) ^ arr_detail::fnv1a(role_name(role)));

  struct GridNote {
    int pitch, on, off;
  };
  std::vector<GridNote> grid;

  int bars = chart.bar_count();
  int bar = 0;
  while (bar < bars) {
    size_t variant = rng.categorical(rp.probs);
    const Pattern& pat = rp.variants[variant];
    int span_start = bar * kTwelfthsPerBar;
    for (const PatternEvent& ev : pat.events) {
      int onset = span_start + ev.onset;
      if (onset >= bars * kTwelfthsPerBar) continue;
      if (style.feel == Feel::swing && ev.onset % kTwelfthsPerBeat == 6) onset += 2;
      int ev_bar = onset / kTwelfthsPerBar;
      const ChordSymbol& chord = chart.chord_at(onset);
      const ChordSymbol& next = chart.chord_at(static_cast<int64_t>(ev_bar + 1) * kTwelfthsPerBar);
      std::vector<int> pitches;
      arr_detail::resolve_degree(chord, next, ev, pitches);
      int off = std::min(onset + ev.duration, bars * kTwelfthsPerBar);
      if (off <= onset) continue;
      for (int p : pitches) grid.push_back({p, onset, off});
    }
    bar += pat.length_bars;
  }

  // Same-pitch overlap is truncated at the next onset so the event encoding
  // round-trips exactly.
  std::map<int, std::vector<GridNote>> by_pitch;
  for (const GridNote& n : grid) by_pitch[n.pitch].push_back(n);
  NoteList out;
  out.time_signature = chart.time_signature;
  for (auto& [pitch, notes] : by_pitch) {
    std::sort(notes.begin(), notes.end(),
              [](const GridNote& a, const GridNote& b) { return a.on < b.on; });
    for (size_t i = 0; i < notes.size(); ++i) {
      int off = notes[i].off;
      if (i + 1 < notes.size()) {
        if (notes[i + 1].on == notes[i].on) {
          notes[i + 1].off = std::max(notes[i + 1].off, off);
          continue;
        }
        off = std::min(off, notes[i + 1].on);
      }
      out.notes.push_back({pitch, notes[i].on / double(kTwelfthsPerBeat),
                           off / double(kTwelfthsPerBeat)});
    }
  }
  out.sort();
  return out;
}

/// Render every role a style defines, as one Song.
inline Song render_song(const ChordChart& chart, const StyleSpec& style, uint64_t seed) {
  Song song;
  song.time_signature = chart.time_signature;
  for (const auto& [role, rp] : style.tracks) {
    song.tracks[role] = render(chart, style, role, seed);
  }
  return song;
}

// --- StyleSpec JSON serialization ---

inline nlohmann::ordered_json to_json(const StyleSpec& style) {
  nlohmann::ordered_json j;
  j["name"] = style.name;
  j["feel"] = feel_name(style.feel);
  nlohmann::ordered_json tracks;
  for (const auto& [role, rp] : style.tracks) {
    nlohmann::ordered_json variants = nlohmann::ordered_json::array();
    for (size_t i = 0; i < rp.variants.size(); ++i) {
      nlohmann::ordered_json v;
      v["prob"] = rp.probs[i];
      v["length_bars"] = rp.variants[i].length_bars;
      nlohmann::ordered_json evs = nlohmann::ordered_json::array();
      for (const PatternEvent& e : rp.variants[i].events)
        evs.push_back({e.onset, e.duration, degree_name(e.degree), e.octave});
      v["events"] = evs;
      variants.push_back(v);
    }
    tracks[role_name(role)] = variants;
  }
  j["tracks"] = tracks;
  return j;
}

inline StyleSpec style_from_json(const nlohmann::json& j) {
  StyleSpec style;
  try {
    style.name = j.at("name").get<std::string>();
    style.feel = feel_from_name(j.at("feel").get<std::string>());
    for (const auto& [role_str, variants] : j.at("tracks").items()) {
      Role role = role_from_name(role_str);
      RolePatterns rp;
      for (const auto& v : variants) {
        Pattern p;
        p.length_bars = v.value("length_bars", 1);
        for (const auto& e : v.at("events")) {
          PatternEvent ev;
          ev.onset = e.at(0).get<int>();
          ev.duration = e.at(1).get<int>();
          ev.degree = degree_from_name(e.at(2).get<std::string>());
          ev.octave = e.at(3).get<int>();
          p.events.push_back(ev);
        }
        rp.variants.push_back(std::move(p));
        rp.probs.push_back(v.at("prob").get<double>());
      }
      style.tracks[role] = std::move(rp);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed style spec: ") + e.what());
  }
  validate(style);
  return style;
}

// --- Built-in styles ---

namespace arr_detail {

inline Pattern make_pattern(int length_bars, std::vector<PatternEvent> events) {
  Pattern p;
  p.length_bars = length_bars;
  p.events = std::move(events);
  return p;
}

inline StyleSpec make_style(std::string name, Feel feel, RolePatterns bass, RolePatterns piano) {
  StyleSpec s;
  s.name = std::move(name);
  s.feel = feel;
  s.tracks[Role::bass] = std::move(bass);
  s.tracks[Role::piano] = std::move(piano);
  validate(s);
  return s;
}

}  // namespace arr_detail

/// The bundled style set: three families (jazz, rock, country) of three
/// styles each. Families share feel and related patterns; the family is the
/// style-name prefix up to the first underscore.
inline const std::vector<StyleSpec>& builtin_styles() {
  using arr_detail::make_pattern;
  using arr_detail::make_style;
  using enum Degree;
  static const std::vector<StyleSpec> styles = [] {
    std::vector<StyleSpec> out;

    // Variants within a style share the front of the bar and diverge late,
    // so greedy decoding commits to one realization cleanly.

    // Family signatures live in the bass rhythm grid: jazz walks quarter
    // notes with chromatic approach tones, rock pumps the eighth grid,
    // country sits on a half-note two-feel. Variants within a style share
    // the front of the bar and diverge late, so greedy decoding commits to
    // one realization cleanly.

    // --- jazz family (swing) ---
    out.push_back(make_style(
        "jazz_swing", Feel::swing,
        {{make_pattern(1, {{0, 12, root, 2}, {12, 12, third, 2}, {24, 12, fifth, 2}, {36, 12, approach, 2}}),
          make_pattern(1, {{0, 12, root, 2}, {12, 12, third, 2}, {24, 12, fifth, 2}, {36, 12, root, 2}}),
          make_pattern(1, {{0, 12, root, 2}, {12, 12, third, 2}, {24, 12, seventh, 2}, {36, 12, approach, 2}})},
         {0.8, 0.12, 0.08}},
        {{make_pattern(1, {{6, 6, full_chord, 3}, {24, 12, full_chord, 3}}),
          make_pattern(1, {{6, 6, full_chord, 3}, {30, 6, full_chord, 3}})},
         {0.85, 0.15}}));
    out.push_back(make_style(
        "jazz_ballad", Feel::swing,
        {{make_pattern(1, {{0, 12, root, 2}, {12, 12, fifth, 2}, {24, 12, third, 2}, {36, 12, approach, 2}}),
          make_pattern(1, {{0, 12, root, 2}, {12, 12, fifth, 2}, {24, 12, third, 2}, {36, 12, fifth, 2}})},
         {0.85, 0.15}},
        {{make_pattern(1, {{0, 18, full_chord, 3}, {24, 24, full_chord, 3}}),
          make_pattern(1, {{0, 18, full_chord, 3}, {30, 18, full_chord, 3}})},
         {0.85, 0.15}}));
    out.push_back(make_style(
        "jazz_uptempo", Feel::swing,
        {{make_pattern(1, {{0, 12, root, 2}, {12, 12, fifth, 2}, {24, 12, third, 2}, {36, 6, fifth, 2}, {42, 4, approach, 2}}),
          make_pattern(1, {{0, 12, root, 2}, {12, 12, fifth, 2}, {24, 12, third, 2}, {36, 6, bass_octave, 2}, {42, 4, approach, 2}})},
         {0.85, 0.15}},
        {{make_pattern(1, {{6, 4, full_chord, 4}, {18, 4, full_chord, 4}, {24, 10, full_chord, 4}}),
          make_pattern(1, {{6, 4, full_chord, 4}, {18, 4, full_chord, 4}, {42, 4, full_chord, 4}})},
         {0.85, 0.15}}));

    // --- rock family (even) ---
    out.push_back(make_style(
        "rock_straight", Feel::even,
        {{make_pattern(1, {{0, 6, root, 2}, {6, 6, root, 2}, {12, 6, root, 2}, {18, 6, root, 2}, {24, 6, root, 2}, {30, 6, root, 2}, {36, 6, root, 2}, {42, 6, root, 2}}),
          make_pattern(1, {{0, 6, root, 2}, {6, 6, root, 2}, {12, 6, root, 2}, {18, 6, root, 2}, {24, 6, root, 2}, {30, 6, root, 2}, {36, 6, fifth, 2}, {42, 6, fifth, 2}})},
         {0.85, 0.15}},
        {{make_pattern(1, {{0, 12, full_chord, 3}, {12, 12, full_chord, 3}, {24, 12, full_chord, 3}, {36, 12, full_chord, 3}}),
          make_pattern(1, {{0, 12, full_chord, 3}, {12, 12, full_chord, 3}, {24, 24, full_chord, 3}})},
         {0.85, 0.15}}));
    out.push_back(make_style(
        "rock_backbeat", Feel::even,
        {{make_pattern(1, {{0, 6, root, 2}, {6, 6, root, 2}, {12, 6, root, 2}, {18, 6, root, 2}, {24, 6, fifth, 2}, {30, 6, fifth, 2}, {36, 6, root, 2}, {42, 6, root, 2}}),
          make_pattern(1, {{0, 6, root, 2}, {6, 6, root, 2}, {12, 6, root, 2}, {18, 6, root, 2}, {24, 6, fifth, 2}, {30, 6, fifth, 2}, {36, 6, fifth, 2}, {42, 6, fifth, 2}})},
         {0.85, 0.15}},
        {{make_pattern(1, {{6, 6, full_chord, 3}, {18, 6, full_chord, 3}, {30, 6, full_chord, 3}, {42, 6, full_chord, 3}}),
          make_pattern(1, {{6, 6, full_chord, 3}, {18, 6, full_chord, 3}, {30, 18, full_chord, 3}})},
         {0.85, 0.15}}));
    out.push_back(make_style(
        "rock_anthem", Feel::even,
        {{make_pattern(1, {{0, 6, root, 2}, {6, 6, bass_octave, 2}, {12, 6, root, 2}, {18, 6, bass_octave, 2}, {24, 6, root, 2}, {30, 6, bass_octave, 2}, {36, 6, root, 2}, {42, 6, bass_octave, 2}}),
          make_pattern(1, {{0, 6, root, 2}, {6, 6, bass_octave, 2}, {12, 6, root, 2}, {18, 6, bass_octave, 2}, {24, 6, root, 2}, {30, 6, bass_octave, 2}, {36, 6, fifth, 2}, {42, 6, fifth, 2}})},
         {0.85, 0.15}},
        {{make_pattern(1, {{0, 6, root, 4}, {6, 6, third, 4}, {12, 6, fifth, 4}, {18, 6, third, 4}, {24, 6, root, 4}, {30, 6, third, 4}, {36, 6, fifth, 4}, {42, 6, third, 4}}),
          make_pattern(1, {{0, 6, root, 4}, {6, 6, third, 4}, {12, 6, fifth, 4}, {18, 6, third, 4}, {24, 6, root, 4}, {30, 6, third, 4}, {36, 6, bass_octave, 4}, {42, 6, fifth, 4}})},
         {0.85, 0.15}}));

    // --- country family (even) ---
    out.push_back(make_style(
        "country_twobeat", Feel::even,
        {{make_pattern(1, {{0, 12, root, 2}, {24, 12, fifth, 2}}),
          make_pattern(1, {{0, 12, root, 2}, {24, 12, fifth, 2}, {42, 6, fifth, 2}})},
         {0.85, 0.15}},
        {{make_pattern(1, {{12, 6, full_chord, 3}, {36, 6, full_chord, 3}}),
          make_pattern(1, {{12, 6, full_chord, 3}, {36, 6, full_chord, 3}, {42, 6, full_chord, 3}})},
         {0.85, 0.15}}));
    out.push_back(make_style(
        "country_train", Feel::even,
        {{make_pattern(1, {{0, 12, root, 2}, {24, 12, fifth, 2}, {36, 12, root, 2}}),
          make_pattern(1, {{0, 12, root, 2}, {24, 12, fifth, 2}, {36, 12, fifth, 2}})},
         {0.85, 0.15}},
        {{make_pattern(1, {{6, 4, full_chord, 3}, {18, 4, full_chord, 3}, {30, 4, full_chord, 3}, {42, 4, full_chord, 3}}),
          make_pattern(1, {{6, 4, full_chord, 3}, {18, 4, full_chord, 3}, {30, 4, full_chord, 3}})},
         {0.85, 0.15}}));
    out.push_back(make_style(
        "country_ballad", Feel::even,
        {{make_pattern(1, {{0, 24, root, 2}, {24, 24, fifth, 2}}),
          make_pattern(1, {{0, 24, root, 2}, {24, 12, fifth, 2}, {36, 12, third, 2}})},
         {0.85, 0.15}},
        {{make_pattern(2, {{0, 12, root, 3}, {12, 6, third, 3}, {24, 12, fifth, 3}, {36, 12, third, 3}, {48, 24, full_chord, 3}, {84, 12, full_chord, 3}}),
          make_pattern(1, {{0, 24, full_chord, 3}, {24, 24, full_chord, 3}})},
         {0.85, 0.15}}));

    return out;
  }();
  return styles;
}

inline const StyleSpec& find_style(const std::vector<StyleSpec>& styles, const std::string& name) {
  for (const StyleSpec& s : styles)
    if (s.name == name) return s;
  std::string known;
  for (const StyleSpec& s : styles) known += (known.empty() ? "" : ", ") + s.name;
  throw ConfigError("unknown style '" + name + "' (available: " + known + ")");
}

/// Family prefix of a style name (text before the first underscore).
inline std::string style_family(const std::string& name) {
  auto pos = name.find('_');
  return pos == std::string::npos ? name : name.substr(0, pos);
}

}  // namespace stylox
