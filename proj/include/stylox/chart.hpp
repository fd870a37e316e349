// Chord chart parsing: a plain-text lead sheet format and chord-symbol
// pitch-class resolution.
//
// Grammar (one chart per file, UTF-8):
//   chart  := [timesig NEWLINE] bar+ "|"
//   timesig:= INT "/" INT            (4/4 or 12/8; defaults to 4/4)
//   bar    := "|" chord+
//   chord  := ROOT [QUALITY] ["/" ROOT] [":" BEATS]
//   ROOT   := [A-G] [#b]?
// Chords in a bar either all carry explicit ":beats" durations (which must
// sum to 4) or none do, in which case the bar is split evenly.

#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stylox/note.hpp"

namespace stylox {

enum class ChordQuality { maj, min, dom7, maj7, min7, dim, aug, sus4, min7b5 };

/// Chord tones as semitone intervals above the root, in degree order
/// (root, third-like, fifth-like, optional seventh).
inline const std::vector<int>& chord_intervals(ChordQuality q) {
  static const std::vector<int> tables[] = {
      {0, 4, 7},      // maj
      {0, 3, 7},      // min
      {0, 4, 7, 10},  // dom7
      {0, 4, 7, 11},  // maj7
      {0, 3, 7, 10},  // min7
      {0, 3, 6},      // dim
      {0, 4, 8},      // aug
      {0, 5, 7},      // sus4
      {0, 3, 6, 10},  // min7b5
  };
  return tables[static_cast<int>(q)];
}

inline std::string quality_name(ChordQuality q) {
  switch (q) {
    case ChordQuality::maj: return "maj";
    case ChordQuality::min: return "min";
    case ChordQuality::dom7: return "7";
    case ChordQuality::maj7: return "maj7";
    case ChordQuality::min7: return "min7";
    case ChordQuality::dim: return "dim";
    case ChordQuality::aug: return "aug";
    case ChordQuality::sus4: return "sus4";
    case ChordQuality::min7b5: return "min7b5";
  }
  return "maj";
}

struct ChordSymbol {
  int root = 0;  // pitch class 0-11
  ChordQuality quality = ChordQuality::maj;
  std::optional<int> bass;  // slash-chord bass pitch class

  bool operator==(const ChordSymbol&) const = default;
};

/// Pitch classes of a chord in root position, transposed by its root.
/// Order follows chord_intervals (root first).
inline std::vector<int> chord_pitch_classes(const ChordSymbol& c) {
  std::vector<int> out;
  for (int iv : chord_intervals(c.quality)) out.push_back((c.root + iv) % 12);
  return out;
}

inline ChordSymbol transpose(const ChordSymbol& c, int semitones) {
  ChordSymbol out = c;
  out.root = ((c.root + semitones) % 12 + 12) % 12;
  if (c.bass) out.bass = ((*c.bass + semitones) % 12 + 12) % 12;
  return out;
}

/// One chord occupying part of a bar; duration on the 12ths-of-a-beat grid.
struct TimedChord {
  ChordSymbol chord;
  int duration_twelfths = 0;

  bool operator==(const TimedChord&) const = default;
};

struct ChordChart {
  TimeSignature time_signature = TimeSignature::four_four;
  std::vector<std::vector<TimedChord>> bars;

  int bar_count() const { return static_cast<int>(bars.size()); }

  /// Chord active at an absolute position (in twelfths from chart start).
  /// Positions past the end wrap around, so charts tile cleanly.
  const ChordSymbol& chord_at(int64_t twelfths) const {
    int64_t total = static_cast<int64_t>(bars.size()) * kTwelfthsPerBar;
    int64_t t = ((twelfths % total) + total) % total;
    const auto& bar = bars[static_cast<size_t>(t / kTwelfthsPerBar)];
    int within = static_cast<int>(t % kTwelfthsPerBar);
    int acc = 0;
    for (const TimedChord& tc : bar) {
      acc += tc.duration_twelfths;
      if (within < acc) return tc.chord;
    }
    return bar.back().chord;
  }

  bool operator==(const ChordChart&) const = default;
};

/// Parse error carrying a 1-based line:column position.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line, int col)
      : std::runtime_error(msg + " at " + std::to_string(line) + ":" + std::to_string(col)),
        line_(line),
        col_(col) {}
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_;
  int col_;
};

namespace detail {

struct ChartScanner {
  const std::string& text;
  size_t pos = 0;
  int line = 1;
  int col = 1;

  explicit ChartScanner(const std::string& t) : text(t) {}

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }

  char advance() {
    char c = text[pos++];
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    return c;
  }

  void skip_space() {
    while (!done() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }
};

inline std::optional<ChordQuality> quality_from_text(const std::string& s) {
  if (s.empty() || s == "maj") return ChordQuality::maj;
  if (s == "m" || s == "min") return ChordQuality::min;
  if (s == "7") return ChordQuality::dom7;
  if (s == "maj7" || s == "M7") return ChordQuality::maj7;
  if (s == "m7" || s == "min7") return ChordQuality::min7;
  if (s == "dim") return ChordQuality::dim;
  if (s == "aug") return ChordQuality::aug;
  if (s == "sus4") return ChordQuality::sus4;
  if (s == "m7b5") return ChordQuality::min7b5;
  return std::nullopt;
}

inline int parse_root(ChartScanner& sc) {
  static const int kNaturals[] = {9, 11, 0, 2, 4, 5, 7};  // A B C D E F G
  int l = sc.line, c = sc.col;
  char ch = sc.advance();
  if (ch < 'A' || ch > 'G') throw ParseError(std::string("invalid root '") + ch + "'", l, c);
  int pc = kNaturals[ch - 'A'];
  if (!sc.done() && (sc.peek() == '#' || sc.peek() == 'b')) {
    pc += sc.advance() == '#' ? 1 : -1;
  }
  return ((pc % 12) + 12) % 12;
}

// Beats to twelfths, requiring exact representability on the grid.
inline int parse_beats(const std::string& s, int line, int col) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || s.empty())
    throw ParseError("invalid duration '" + s + "'", line, col);
  double tw = v * kTwelfthsPerBeat;
  int rounded = static_cast<int>(std::llround(tw));
  if (rounded <= 0 || std::abs(tw - rounded) > 1e-6)
    throw ParseError("duration '" + s + "' not on the 12ths-of-a-beat grid", line, col);
  return rounded;
}

}  // namespace detail

/// Parse a chart text into a ChordChart. Rejects anything outside the
/// grammar with a positioned ParseError.
inline ChordChart parse_chart(const std::string& text) {
  detail::ChartScanner sc(text);
  ChordChart chart;

  // Optional time-signature line before the first '|'.
  sc.skip_space();
  if (!sc.done() && std::isdigit(static_cast<unsigned char>(sc.peek()))) {
    int l = sc.line, c = sc.col;
    std::string ts;
    while (!sc.done() && !std::isspace(static_cast<unsigned char>(sc.peek()))) ts += sc.advance();
    if (ts == "4/4")
      chart.time_signature = TimeSignature::four_four;
    else if (ts == "12/8")
      chart.time_signature = TimeSignature::twelve_eight;
    else
      throw ParseError("unsupported time signature '" + ts + "'", l, c);
  }

  sc.skip_space();
  if (sc.done() || sc.peek() != '|')
    throw ParseError("expected '|' to open a bar", sc.line, sc.col);

  struct RawChord {
    ChordSymbol chord;
    std::optional<int> twelfths;
    int line, col;
  };

  auto finish_bar = [&chart](std::vector<RawChord>& raw, int line, int col) {
    if (raw.empty()) throw ParseError("empty bar", line, col);
    bool any_explicit = false, all_explicit = true;
    for (const RawChord& rc : raw) {
      any_explicit |= rc.twelfths.has_value();
      all_explicit &= rc.twelfths.has_value();
    }
    std::vector<TimedChord> bar;
    if (!any_explicit) {
      int n = static_cast<int>(raw.size());
      if (kTwelfthsPerBar % n != 0)
        throw ParseError("cannot split bar evenly among " + std::to_string(n) + " chords",
                         raw.front().line, raw.front().col);
      for (const RawChord& rc : raw) bar.push_back({rc.chord, kTwelfthsPerBar / n});
    } else if (all_explicit) {
      int sum = 0;
      for (const RawChord& rc : raw) {
        bar.push_back({rc.chord, *rc.twelfths});
        sum += *rc.twelfths;
      }
      if (sum != kTwelfthsPerBar) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", sum / 12.0);
        throw ParseError("bar durations sum to " + std::string(buf) + " beats, expected 4",
                         raw.front().line, raw.front().col);
      }
    } else {
      throw ParseError("mixed explicit and implicit durations in one bar", raw.front().line,
                       raw.front().col);
    }
    chart.bars.push_back(std::move(bar));
    raw.clear();
  };

  std::vector<RawChord> raw;
  bool in_bar = false;
  while (true) {
    sc.skip_space();
    if (sc.done()) {
      if (in_bar) throw ParseError("unterminated bar (missing '|')", sc.line, sc.col);
      break;
    }
    if (sc.peek() == '|') {
      int l = sc.line, c = sc.col;
      sc.advance();
      // Consecutive barlines (double bars, line breaks between bars) collapse.
      if (in_bar && !raw.empty()) finish_bar(raw, l, c);
      // A '|' followed by end-of-text is the closing barline.
      sc.skip_space();
      if (sc.done()) break;
      in_bar = true;
      continue;
    }
    if (!in_bar) throw ParseError("expected '|' to open a bar", sc.line, sc.col);

    // Scan one chord token.
    int l = sc.line, c = sc.col;
    RawChord rc;
    rc.line = l;
    rc.col = c;
    rc.chord.root = detail::parse_root(sc);
    std::string quality;
    int ql = sc.line, qc = sc.col;
    while (!sc.done() && !std::isspace(static_cast<unsigned char>(sc.peek())) &&
           sc.peek() != '|' && sc.peek() != '/' && sc.peek() != ':') {
      quality += sc.advance();
    }
    auto q = detail::quality_from_text(quality);
    if (!q) throw ParseError("unknown quality '" + quality + "'", ql, qc);
    rc.chord.quality = *q;
    if (!sc.done() && sc.peek() == '/') {
      sc.advance();
      rc.chord.bass = detail::parse_root(sc);
    }
    if (!sc.done() && sc.peek() == ':') {
      sc.advance();
      int dl = sc.line, dc = sc.col;
      std::string beats;
      while (!sc.done() && !std::isspace(static_cast<unsigned char>(sc.peek())) &&
             sc.peek() != '|') {
        beats += sc.advance();
      }
      rc.twelfths = detail::parse_beats(beats, dl, dc);
    }
    raw.push_back(rc);
  }

  if (chart.bars.empty()) throw ParseError("empty chart", 1, 1);
  return chart;
}

}  // namespace stylox
