// Segment encodings: binary piano roll and MIDI-like event sequences, plus
// the 8-bar segmentation songs are cut into.
//
// Event vocabulary: NoteOn(0-127), NoteOff(0-127), NoteOff(All),
// TimeShift(1-24) measured in 12ths of a beat, and BOS/EOS/PAD specials.
// Token-id layout is documented in docs/vocab.md and frozen by tests.

#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "stylox/note.hpp"

namespace stylox {

constexpr int kSegmentBars = 8;
constexpr int kMaxTimeShift = 24;
constexpr int kRollColumnsPerBeat = 4;

/// A bar-aligned window of a track, onsets re-based to zero.
struct Segment {
  NoteList notes;
  int bars = kSegmentBars;

  double length_beats() const { return bars * static_cast<double>(kBeatsPerBar); }
  int length_twelfths() const { return bars * kTwelfthsPerBar; }
  bool empty() const { return notes.notes.empty(); }

  bool operator==(const Segment&) const = default;
};

/// Cut a track into consecutive 8-bar windows, splitting notes that overlap
/// window boundaries. A trailing partial window is kept (zero-padded) when it
/// holds at least one bar of content, dropped otherwise. `forced_windows`
/// pins the window count (empty windows included), so that parallel renders
/// of one song segment identically.
inline std::vector<Segment> segment(const NoteList& track, int forced_windows = -1) {
  constexpr double kWin = kSegmentBars * kBeatsPerBar;
  double extent = 0.0;
  for (const Note& n : track.notes) extent = std::max(extent, n.offset);

  int windows;
  if (forced_windows >= 0) {
    windows = forced_windows;
  } else {
    windows = 0;
    while (kWin * windows < extent - 1e-9) {
      double start = kWin * windows;
      bool full = extent >= start + kWin - 1e-9;
      double content = extent - start;
      if (!full && content < kBeatsPerBar - 1e-9) break;
      ++windows;
    }
  }

  std::vector<Segment> out(windows);
  for (auto& seg : out) seg.notes.time_signature = track.time_signature;
  for (const Note& n : track.notes) {
    int first = std::max(0, static_cast<int>(std::floor(n.onset / kWin + 1e-12)));
    for (int w = first; w < windows; ++w) {
      double lo = std::max(n.onset, kWin * w);
      double hi = std::min(n.offset, kWin * (w + 1));
      if (hi - lo <= 1e-9) {
        if (kWin * w >= n.offset) break;
        continue;
      }
      out[w].notes.notes.push_back({n.pitch, lo - kWin * w, hi - kWin * w});
    }
  }
  for (auto& seg : out) seg.notes.sort();
  return out;
}

/// Number of 8-bar windows a chart of `bars` bars produces under the
/// segmentation rule above.
inline int window_count_for_bars(int bars) {
  int beats = bars * kBeatsPerBar;
  int full = beats / (kSegmentBars * kBeatsPerBar);
  int rem = beats % (kSegmentBars * kBeatsPerBar);
  return full + (rem >= kBeatsPerBar ? 1 : 0);
}

/// Binary pitch x time grid, 128 pitches by 4 columns per beat.
struct PianoRoll {
  int cols = 0;
  std::vector<uint8_t> cells;  // row-major, 128 rows

  uint8_t& at(int pitch, int col) { return cells[static_cast<size_t>(pitch) * cols + col]; }
  uint8_t at(int pitch, int col) const { return cells[static_cast<size_t>(pitch) * cols + col]; }

  bool operator==(const PianoRoll&) const = default;
};

/// Rasterize a segment. Onsets/offsets round to the nearest column; every
/// note occupies at least one column.
inline PianoRoll to_piano_roll(const Segment& seg) {
  PianoRoll roll;
  roll.cols = seg.bars * kBeatsPerBar * kRollColumnsPerBeat;
  roll.cells.assign(static_cast<size_t>(128) * roll.cols, 0);
  for (const Note& n : seg.notes.notes) {
    int on = static_cast<int>(std::llround(n.onset * kRollColumnsPerBeat));
    int off = static_cast<int>(std::llround(n.offset * kRollColumnsPerBeat));
    if (on >= roll.cols) continue;
    if (off <= on) off = on + 1;
    off = std::min(off, roll.cols);
    for (int c = on; c < off; ++c) roll.at(n.pitch, c) = 1;
  }
  return roll;
}

enum class TokenType { pad, bos, eos, note_on, note_off, note_off_all, time_shift };

struct Token {
  TokenType type = TokenType::pad;
  int arg = 0;  // pitch for note_on/note_off, delta for time_shift

  bool operator==(const Token&) const = default;
};

inline Token tok_on(int pitch) { return {TokenType::note_on, pitch}; }
inline Token tok_off(int pitch) { return {TokenType::note_off, pitch}; }
inline Token tok_off_all() { return {TokenType::note_off_all, 0}; }
inline Token tok_shift(int d) { return {TokenType::time_shift, d}; }
inline Token tok_bos() { return {TokenType::bos, 0}; }
inline Token tok_eos() { return {TokenType::eos, 0}; }
inline Token tok_pad() { return {TokenType::pad, 0}; }

inline std::string token_name(const Token& t) {
  switch (t.type) {
    case TokenType::pad: return "PAD";
    case TokenType::bos: return "BOS";
    case TokenType::eos: return "EOS";
    case TokenType::note_on: return "NoteOn(" + std::to_string(t.arg) + ")";
    case TokenType::note_off: return "NoteOff(" + std::to_string(t.arg) + ")";
    case TokenType::note_off_all: return "NoteOff(All)";
    case TokenType::time_shift: return "TimeShift(" + std::to_string(t.arg) + ")";
  }
  return "?";
}

using EventSeq = std::vector<Token>;

/// Fixed token <-> id bijection, 284 entries:
///   0 PAD, 1 BOS, 2 EOS, 3..130 NoteOn(0..127), 131..258 NoteOff(0..127),
///   259 NoteOff(All), 260..283 TimeShift(1..24).
struct TokenVocab {
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kNoteOnBase = 3;
  static constexpr int kNoteOffBase = 131;
  static constexpr int kNoteOffAll = 259;
  static constexpr int kTimeShiftBase = 260;  // TimeShift(1) = 260
  static constexpr int kSize = 284;

  static int size() { return kSize; }

  static int to_id(const Token& t) {
    switch (t.type) {
      case TokenType::pad: return kPad;
      case TokenType::bos: return kBos;
      case TokenType::eos: return kEos;
      case TokenType::note_on:
        if (t.arg < 0 || t.arg > 127) break;
        return kNoteOnBase + t.arg;
      case TokenType::note_off:
        if (t.arg < 0 || t.arg > 127) break;
        return kNoteOffBase + t.arg;
      case TokenType::note_off_all: return kNoteOffAll;
      case TokenType::time_shift:
        if (t.arg < 1 || t.arg > kMaxTimeShift) break;
        return kTimeShiftBase + t.arg - 1;
    }
    throw std::invalid_argument("token out of range: " + token_name(t));
  }

  static Token from_id(int id) {
    if (id == kPad) return tok_pad();
    if (id == kBos) return tok_bos();
    if (id == kEos) return tok_eos();
    if (id >= kNoteOnBase && id < kNoteOnBase + 128) return tok_on(id - kNoteOnBase);
    if (id >= kNoteOffBase && id < kNoteOffBase + 128) return tok_off(id - kNoteOffBase);
    if (id == kNoteOffAll) return tok_off_all();
    if (id >= kTimeShiftBase && id < kTimeShiftBase + kMaxTimeShift)
      return tok_shift(id - kTimeShiftBase + 1);
    throw std::invalid_argument("unknown token id " + std::to_string(id));
  }

  /// FNV-1a over token names in id order; embedded in checkpoints so that
  /// incompatible vocab layouts are rejected at load time.
  static uint64_t hash() {
    uint64_t h = 1469598103934665603ull;
    for (int id = 0; id < kSize; ++id) {
      for (char c : token_name(from_id(id))) {
        h ^= static_cast<uint8_t>(c);
        h *= 1099511628211ull;
      }
    }
    return h;
  }
};

inline std::vector<int> tokenize(const EventSeq& seq) {
  std::vector<int> ids;
  ids.reserve(seq.size());
  for (const Token& t : seq) ids.push_back(TokenVocab::to_id(t));
  return ids;
}

inline EventSeq detokenize(const std::vector<int>& ids) {
  EventSeq seq;
  seq.reserve(ids.size());
  for (int id : ids) seq.push_back(TokenVocab::from_id(id));
  return seq;
}

namespace codec_detail {

struct GridNote {
  int pitch;
  int on, off;  // twelfths
};

/// Quantize to the 12ths grid (round to nearest, minimum one twelfth) and
/// merge overlapping same-pitch notes into their union, which is the piano
/// roll's view of them and the only form the event encoding can represent
/// losslessly. Abutting notes stay separate (retriggers survive).
inline std::vector<GridNote> quantize_notes(const Segment& seg) {
  int total = seg.length_twelfths();
  std::map<int, std::vector<GridNote>> by_pitch;
  for (const Note& n : seg.notes.notes) {
    int on = static_cast<int>(std::llround(n.onset * kTwelfthsPerBeat));
    int off = static_cast<int>(std::llround(n.offset * kTwelfthsPerBeat));
    if (on >= total) continue;
    if (off <= on) off = on + 1;
    off = std::min(off, total);
    if (off <= on) continue;
    by_pitch[n.pitch].push_back({n.pitch, on, off});
  }
  std::vector<GridNote> out;
  for (auto& [pitch, notes] : by_pitch) {
    std::sort(notes.begin(), notes.end(),
              [](const GridNote& a, const GridNote& b) { return a.on < b.on; });
    std::vector<GridNote> merged;
    for (const GridNote& n : notes) {
      if (!merged.empty() && merged.back().off > n.on) {
        merged.back().off = std::max(merged.back().off, n.off);
        continue;
      }
      merged.push_back(n);
    }
    out.insert(out.end(), merged.begin(), merged.end());
  }
  std::sort(out.begin(), out.end(), [](const GridNote& a, const GridNote& b) {
    if (a.on != b.on) return a.on < b.on;
    return a.pitch < b.pitch;
  });
  return out;
}

}  // namespace codec_detail

/// Encode a segment as a BOS...EOS event sequence. Events are emitted in
/// time order; at equal instants NoteOffs precede NoteOns, both in ascending
/// pitch order. Gaps longer than 24 twelfths decompose greedily into maximal
/// TimeShift(24) chunks. With `compress_offs` (used for piano), an instant
/// where every sounding note ends and at least two NoteOffs would be needed
/// emits a single NoteOff(All).
inline EventSeq encode_events(const Segment& seg, bool compress_offs) {
  auto notes = codec_detail::quantize_notes(seg);

  std::map<int, std::pair<std::vector<int>, std::vector<int>>> instants;  // t -> (offs, ons)
  for (const auto& n : notes) {
    instants[n.on].second.push_back(n.pitch);
    instants[n.off].first.push_back(n.pitch);
  }

  EventSeq seq;
  seq.push_back(tok_bos());
  int clock = 0;
  int sounding = 0;
  for (auto& [t, evs] : instants) {
    auto& [offs, ons] = evs;
    if (offs.empty() && ons.empty()) continue;
    int gap = t - clock;
    while (gap > kMaxTimeShift) {
      seq.push_back(tok_shift(kMaxTimeShift));
      gap -= kMaxTimeShift;
    }
    if (gap > 0) seq.push_back(tok_shift(gap));
    clock = t;

    std::sort(offs.begin(), offs.end());
    std::sort(ons.begin(), ons.end());
    if (compress_offs && offs.size() >= 2 && static_cast<int>(offs.size()) == sounding) {
      seq.push_back(tok_off_all());
    } else {
      for (int p : offs) seq.push_back(tok_off(p));
    }
    sounding -= static_cast<int>(offs.size());
    for (int p : ons) seq.push_back(tok_on(p));
    sounding += static_cast<int>(ons.size());
  }
  seq.push_back(tok_eos());
  return seq;
}

struct DecodeResult {
  Segment segment;
  int anomalies = 0;  // off-with-nothing-open, duplicate note-on, time overflow
};

/// Decode an event sequence (possibly model-generated and invalid) into a
/// segment. Anomalies are counted, never fatal: a NoteOff with nothing open
/// or a duplicate NoteOn each count one; TimeShift past the segment end
/// clamps the clock; notes still open at EOS ring to the segment end.
inline DecodeResult decode_events(const EventSeq& seq, int bars = kSegmentBars) {
  DecodeResult res;
  res.segment.bars = bars;
  const int total = res.segment.length_twelfths();
  int clock = 0;
  std::map<int, std::deque<int>> open;  // pitch -> onset twelfths, FIFO

  auto emit = [&](int pitch, int on, int off) {
    off = std::min(off, total);
    if (off <= on) off = std::min(on + 1, total);
    if (off <= on) return;
    res.segment.notes.notes.push_back(
        {pitch, on / double(kTwelfthsPerBeat), off / double(kTwelfthsPerBeat)});
  };

  for (const Token& t : seq) {
    if (t.type == TokenType::bos || t.type == TokenType::pad) continue;
    if (t.type == TokenType::eos) break;
    switch (t.type) {
      case TokenType::note_on:
        if (!open[t.arg].empty()) ++res.anomalies;
        open[t.arg].push_back(clock);
        break;
      case TokenType::note_off: {
        auto it = open.find(t.arg);
        if (it == open.end() || it->second.empty()) {
          ++res.anomalies;
        } else {
          emit(t.arg, it->second.front(), clock);
          it->second.pop_front();
        }
        break;
      }
      case TokenType::note_off_all: {
        bool any = false;
        for (auto& [pitch, onsets] : open) {
          while (!onsets.empty()) {
            emit(pitch, onsets.front(), clock);
            onsets.pop_front();
            any = true;
          }
        }
        if (!any) ++res.anomalies;
        break;
      }
      case TokenType::time_shift:
        clock += t.arg;
        if (clock > total) {
          ++res.anomalies;
          clock = total;
        }
        break;
      default: break;
    }
  }
  for (auto& [pitch, onsets] : open) {
    while (!onsets.empty()) {
      ++res.anomalies;
      emit(pitch, onsets.front(), total);
      onsets.pop_front();
    }
  }
  res.segment.notes.sort();
  return res;
}

/// Total time advanced by the TimeShift tokens of a sequence, in twelfths.
inline int total_time_shift(const EventSeq& seq) {
  int t = 0;
  for (const Token& tok : seq)
    if (tok.type == TokenType::time_shift) t += tok.arg;
  return t;
}

}  // namespace stylox
