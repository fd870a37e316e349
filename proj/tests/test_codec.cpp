// Segment / piano roll / event sequence codec tests.

#include "stylox/codec.hpp"

#include <vector>

#include "gtest/gtest.h"
#include "stylox/arranger.hpp"
#include "stylox/rng.hpp"

namespace stylox {
namespace {

Segment seg_of(std::vector<Note> notes, int bars = kSegmentBars) {
  Segment s;
  s.bars = bars;
  s.notes.notes = std::move(notes);
  s.notes.sort();
  return s;
}

NoteList track_of(std::vector<Note> notes) {
  NoteList t;
  t.notes = std::move(notes);
  t.sort();
  return t;
}

std::vector<std::pair<int, std::pair<int, int>>> grid_notes(const Segment& s) {
  std::vector<std::pair<int, std::pair<int, int>>> out;
  for (const Note& n : s.notes.notes)
    out.push_back({n.pitch,
                   {static_cast<int>(std::llround(n.onset * 12)),
                    static_cast<int>(std::llround(n.offset * 12))}});
  std::sort(out.begin(), out.end());
  return out;
}

// --- segmentation ---

TEST(SegmentTest, BoundaryNoteSplits) {
  // The held note crosses the 8-bar boundary and becomes one note per side;
  // the second window carries a bar of content so it is kept.
  auto segs = segment(track_of({{60, 31.0, 33.0}, {62, 33.0, 36.0}}));
  ASSERT_EQ(segs.size(), 2u);
  ASSERT_EQ(segs[0].notes.notes.size(), 1u);
  EXPECT_EQ(segs[0].notes.notes[0], (Note{60, 31.0, 32.0}));
  ASSERT_EQ(segs[1].notes.notes.size(), 2u);
  EXPECT_EQ(segs[1].notes.notes[0], (Note{60, 0.0, 1.0}));
  EXPECT_EQ(segs[1].notes.notes[1], (Note{62, 1.0, 4.0}));
}

TEST(SegmentTest, SixteenBarsGiveTwoSegments) {
  std::vector<Note> notes;
  for (int bar = 0; bar < 16; ++bar) notes.push_back({48, bar * 4.0, bar * 4.0 + 1.0});
  EXPECT_EQ(segment(track_of(notes)).size(), 2u);
}

TEST(SegmentTest, EmptyTrack) { EXPECT_TRUE(segment(NoteList{}).empty()); }

TEST(SegmentTest, ShortTrailingContentDropped) {
  // 8 bars + a quarter-bar tail: tail dropped.
  auto segs = segment(track_of({{60, 0.0, 32.0}, {62, 32.0, 33.0}}));
  EXPECT_EQ(segs.size(), 1u);
  // 8 bars + a full bar tail: tail kept, zero padded.
  segs = segment(track_of({{60, 0.0, 32.0}, {62, 32.0, 36.0}}));
  EXPECT_EQ(segs.size(), 2u);
}

TEST(SegmentTest, ForcedWindowsIncludeEmpty) {
  auto segs = segment(track_of({{60, 0.0, 1.0}}), 3);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_TRUE(segs[1].empty());
  EXPECT_TRUE(segs[2].empty());
}

TEST(SegmentTest, WindowCountForBars) {
  EXPECT_EQ(window_count_for_bars(8), 1);
  EXPECT_EQ(window_count_for_bars(12), 2);
  EXPECT_EQ(window_count_for_bars(16), 2);
  EXPECT_EQ(window_count_for_bars(4), 1);
}

// --- piano roll ---

TEST(PianoRollTest, WholeBeatNote) {
  PianoRoll roll = to_piano_roll(seg_of({{60, 0.0, 1.0}}));
  EXPECT_EQ(roll.cols, 128);
  for (int c = 0; c < 4; ++c) EXPECT_EQ(roll.at(60, c), 1);
  EXPECT_EQ(roll.at(60, 4), 0);
  EXPECT_EQ(roll.at(61, 0), 0);
}

TEST(PianoRollTest, TinyNoteStillOneColumn) {
  PianoRoll roll = to_piano_roll(seg_of({{60, 0.0, 0.1}}));
  EXPECT_EQ(roll.at(60, 0), 1);
  EXPECT_EQ(roll.at(60, 1), 0);
}

TEST(PianoRollTest, EmptySegmentAllZero) {
  PianoRoll roll = to_piano_roll(seg_of({}));
  for (uint8_t c : roll.cells) EXPECT_EQ(c, 0);
  EXPECT_EQ(roll.cells.size(), 128u * 128u);
}

// --- event encoding ---

TEST(EncodeTest, TwentyTokenBar) {
  // One bar: a D3 half note, an offbeat chord, then a tied chord to the bar
  // end that ends all sounding notes at once.
  Segment bar = seg_of({{50, 0.0, 2.0},
                        {60, 0.75, 1.75},
                        {65, 0.75, 1.75},
                        {69, 0.75, 1.75},
                        {76, 0.75, 1.75},
                        {43, 2.0, 4.0},
                        {59, 2.0, 4.0},
                        {65, 2.0, 4.0},
                        {69, 2.0, 4.0},
                        {76, 2.0, 4.0}},
                       1);
  EventSeq seq = encode_events(bar, /*compress_offs=*/true);
  ASSERT_GE(seq.size(), 2u);
  EXPECT_EQ(seq.front(), tok_bos());
  EXPECT_EQ(seq.back(), tok_eos());
  EventSeq payload(seq.begin() + 1, seq.end() - 1);

  EventSeq expected = {
      tok_on(50),  tok_shift(9),  tok_on(60),  tok_on(65),  tok_on(69),
      tok_on(76),  tok_shift(12), tok_off(60), tok_off(65), tok_off(69),
      tok_off(76), tok_shift(3),  tok_off(50), tok_on(43),  tok_on(59),
      tok_on(65),  tok_on(69),    tok_on(76),  tok_shift(24), tok_off_all(),
  };
  ASSERT_EQ(payload.size(), 20u);
  EXPECT_EQ(payload, expected);

  DecodeResult round = decode_events(seq, 1);
  EXPECT_EQ(round.anomalies, 0);
  EXPECT_EQ(grid_notes(round.segment), grid_notes(bar));
}

TEST(EncodeTest, LongGapDecomposesGreedily) {
  Segment s = seg_of({{60, 0.0, 0.5}, {62, 3.0, 3.5}});  // gap of 30 twelfths
  EventSeq seq = encode_events(s, false);
  EventSeq expected = {tok_bos(),     tok_on(60),   tok_shift(6),  tok_off(60),
                       tok_shift(24), tok_shift(6), tok_on(62),    tok_shift(6),
                       tok_off(62),   tok_eos()};
  EXPECT_EQ(seq, expected);
}

TEST(EncodeTest, EmptySegment) {
  EventSeq seq = encode_events(seg_of({}), true);
  EXPECT_EQ(seq, (EventSeq{tok_bos(), tok_eos()}));
}

TEST(EncodeTest, NoteOffAllNeedsTwoAndScopesToSounding) {
  // Single note ending alone: no NoteOff(All) even with compression on.
  EventSeq seq = encode_events(seg_of({{60, 0.0, 1.0}}), true);
  EXPECT_EQ(seq, (EventSeq{tok_bos(), tok_on(60), tok_shift(12), tok_off(60), tok_eos()}));
  // Two notes end while a third keeps sounding: individual offs.
  seq = encode_events(seg_of({{60, 0.0, 1.0}, {64, 0.0, 1.0}, {48, 0.0, 2.0}}), true);
  int off_all = 0;
  for (const Token& t : seq) off_all += t.type == TokenType::note_off_all;
  EXPECT_EQ(off_all, 0);
}

TEST(EncodeTest, OffsBeforeOnsAtEqualTime) {
  EventSeq seq = encode_events(seg_of({{60, 0.0, 1.0}, {62, 1.0, 2.0}}), false);
  EventSeq expected = {tok_bos(),  tok_on(60),   tok_shift(12),
                       tok_off(60), tok_on(62),  tok_shift(12),
                       tok_off(62), tok_eos()};
  EXPECT_EQ(seq, expected);
}

TEST(EncodeTest, SamePitchOverlapMergesToUnion) {
  // Overlapping same-pitch notes merge, matching the piano roll's view.
  Segment s = seg_of({{60, 0.0, 2.0}, {60, 1.0, 3.0}});
  EventSeq seq = encode_events(s, false);
  DecodeResult round = decode_events(seq);
  EXPECT_EQ(round.anomalies, 0);
  EXPECT_EQ(grid_notes(round.segment), grid_notes(seg_of({{60, 0.0, 3.0}})));
  // Abutting notes stay separate retriggers.
  s = seg_of({{60, 0.0, 1.0}, {60, 1.0, 2.0}});
  round = decode_events(encode_events(s, false));
  EXPECT_EQ(round.anomalies, 0);
  EXPECT_EQ(grid_notes(round.segment), grid_notes(s));
}

// --- decoding ---

TEST(DecodeTest, OffWithNothingOpen) {
  DecodeResult res = decode_events({tok_bos(), tok_off(60), tok_eos()});
  EXPECT_TRUE(res.segment.empty());
  EXPECT_EQ(res.anomalies, 1);
}

TEST(DecodeTest, DanglingOnRingsToSegmentEnd) {
  DecodeResult res = decode_events({tok_bos(), tok_on(60), tok_eos()});
  ASSERT_EQ(res.segment.notes.notes.size(), 1u);
  EXPECT_EQ(res.segment.notes.notes[0], (Note{60, 0.0, 32.0}));
  EXPECT_EQ(res.anomalies, 1);
}

TEST(DecodeTest, TimeOverflowClamped) {
  EventSeq seq = {tok_bos()};
  for (int i = 0; i < 20; ++i) seq.push_back(tok_shift(24));  // 480 twelfths > 384
  seq.push_back(tok_on(60));
  seq.push_back(tok_eos());
  DecodeResult res = decode_events(seq);
  EXPECT_GE(res.anomalies, 1);
  EXPECT_TRUE(res.segment.empty());  // opened at the very end, zero room
}

TEST(DecodeTest, RoundTripOnArrangerOutput) {
  ChordChart chart = parse_chart("| C | Am | F | G7 | C | F | G | C |");
  for (const StyleSpec& style : builtin_styles()) {
    for (Role role : {Role::bass, Role::piano}) {
      NoteList track = render(chart, style, role, 11);
      auto segs = segment(track);
      ASSERT_FALSE(segs.empty());
      for (const Segment& s : segs) {
        EventSeq seq = encode_events(s, role == Role::piano);
        DecodeResult round = decode_events(seq, s.bars);
        EXPECT_EQ(round.anomalies, 0) << style.name << " " << role_name(role);
        EXPECT_EQ(grid_notes(round.segment), grid_notes(s))
            << style.name << " " << role_name(role);
      }
    }
  }
}

TEST(DecodeTest, EncodedSequencesAlwaysDecodeCleanly) {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Note> notes;
    size_t n = 1 + rng.uniform_int(30);
    for (size_t i = 0; i < n; ++i) {
      double on = rng.uniform() * 31.9;
      double dur = 0.05 + rng.uniform() * 4.0;
      notes.push_back({static_cast<int>(30 + rng.uniform_int(70)), on, std::min(on + dur, 32.0)});
    }
    Segment s = seg_of(std::move(notes));
    for (bool compress : {false, true}) {
      DecodeResult round = decode_events(encode_events(s, compress));
      EXPECT_EQ(round.anomalies, 0);
    }
  }
}

TEST(DecodeTest, RollRoundTripThroughEvents) {
  Rng rng(1234);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Note> notes;
    size_t n = rng.uniform_int(25);
    for (size_t i = 0; i < n; ++i) {
      int on = static_cast<int>(rng.uniform_int(380));
      int dur = 1 + static_cast<int>(rng.uniform_int(48));
      notes.push_back({static_cast<int>(30 + rng.uniform_int(70)), on / 12.0,
                       std::min((on + dur) / 12.0, 32.0)});
    }
    Segment s = seg_of(std::move(notes));
    Segment decoded = decode_events(encode_events(s, true)).segment;
    EXPECT_EQ(to_piano_roll(decoded), to_piano_roll(s));
  }
}

TEST(DecodeTest, TranspositionEquivariance) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Note> notes;
    size_t n = 1 + rng.uniform_int(20);
    for (size_t i = 0; i < n; ++i) {
      int on = static_cast<int>(rng.uniform_int(372));
      int dur = 1 + static_cast<int>(rng.uniform_int(24));
      notes.push_back({static_cast<int>(40 + rng.uniform_int(40)), on / 12.0, (on + dur) / 12.0});
    }
    int k = static_cast<int>(rng.uniform_int(13)) - 6;
    Segment s = seg_of(notes);
    for (Note& nn : notes) nn.pitch += k;
    Segment shifted = seg_of(notes);
    EventSeq a = encode_events(s, false);
    EventSeq b = encode_events(shifted, false);
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      if (a[i].type == TokenType::note_on || a[i].type == TokenType::note_off) {
        EXPECT_EQ(b[i].type, a[i].type);
        EXPECT_EQ(b[i].arg, a[i].arg + k);
      } else {
        EXPECT_EQ(b[i], a[i]);
      }
    }
  }
}

// --- vocab ---

TEST(VocabTest, SizeIs284) { EXPECT_EQ(TokenVocab::size(), 284); }

TEST(VocabTest, StableSpecialIds) {
  EXPECT_EQ(TokenVocab::to_id(tok_pad()), 0);
  EXPECT_EQ(TokenVocab::to_id(tok_bos()), 1);
  EXPECT_EQ(TokenVocab::to_id(tok_eos()), 2);
  EXPECT_EQ(TokenVocab::to_id(tok_on(0)), 3);
  EXPECT_EQ(TokenVocab::to_id(tok_off(0)), 131);
  EXPECT_EQ(TokenVocab::to_id(tok_off_all()), 259);
  EXPECT_EQ(TokenVocab::to_id(tok_shift(1)), 260);
  EXPECT_EQ(TokenVocab::to_id(tok_shift(24)), 283);
}

TEST(VocabTest, RoundTripAllIds) {
  for (int id = 0; id < TokenVocab::size(); ++id)
    EXPECT_EQ(TokenVocab::to_id(TokenVocab::from_id(id)), id);
  EXPECT_THROW(TokenVocab::from_id(284), std::invalid_argument);
  EXPECT_THROW(TokenVocab::from_id(-1), std::invalid_argument);
}

TEST(VocabTest, TokenizeDetokenizeInverse) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> ids;
    for (int i = 0; i < 40; ++i) ids.push_back(static_cast<int>(rng.uniform_int(284)));
    EXPECT_EQ(tokenize(detokenize(ids)), ids);
  }
}

}  // namespace
}  // namespace stylox
