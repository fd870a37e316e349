// Chord chart parser and chord-symbol tests.

#include "stylox/chart.hpp"

#include <set>

#include "gtest/gtest.h"
#include "stylox/rng.hpp"

namespace stylox {
namespace {

std::set<int> pc_set(const ChordSymbol& c) {
  auto v = chord_pitch_classes(c);
  return {v.begin(), v.end()};
}

TEST(ChartParseTest, FourBarsOneChordEach) {
  ChordChart chart = parse_chart("4/4\n| C | F | G7 | C |");
  ASSERT_EQ(chart.bar_count(), 4);
  EXPECT_EQ(chart.time_signature, TimeSignature::four_four);
  for (const auto& bar : chart.bars) {
    ASSERT_EQ(bar.size(), 1u);
    EXPECT_EQ(bar[0].duration_twelfths, 48);
  }
  EXPECT_EQ(chart.bars[0][0].chord.root, 0);
  EXPECT_EQ(chart.bars[1][0].chord.root, 5);
  EXPECT_EQ(chart.bars[2][0].chord.root, 7);
  EXPECT_EQ(chart.bars[2][0].chord.quality, ChordQuality::dom7);
}

TEST(ChartParseTest, EvenSplitTwoChords) {
  ChordChart chart = parse_chart("| C F |");
  ASSERT_EQ(chart.bar_count(), 1);
  ASSERT_EQ(chart.bars[0].size(), 2u);
  EXPECT_EQ(chart.bars[0][0].duration_twelfths, 24);  // 2 beats
  EXPECT_EQ(chart.bars[0][1].duration_twelfths, 24);
}

TEST(ChartParseTest, EvenSplitThreeChords) {
  ChordChart chart = parse_chart("| C F G |");
  ASSERT_EQ(chart.bars[0].size(), 3u);
  EXPECT_EQ(chart.bars[0][0].duration_twelfths, 16);  // 4/3 beats on the grid
}

TEST(ChartParseTest, UnknownQualityPosition) {
  try {
    parse_chart("| Cx |");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_STREQ(e.what(), "unknown quality 'x' at 1:4");
    EXPECT_EQ(e.line(), 1);
    EXPECT_EQ(e.col(), 4);
  }
}

TEST(ChartParseTest, ExplicitDurations) {
  ChordChart chart = parse_chart("| C:3 G:1 | F:2 G:2 |");
  EXPECT_EQ(chart.bars[0][0].duration_twelfths, 36);
  EXPECT_EQ(chart.bars[0][1].duration_twelfths, 12);
  EXPECT_EQ(chart.bars[1][0].duration_twelfths, 24);
}

TEST(ChartParseTest, DurationMismatchRejected) {
  EXPECT_THROW(parse_chart("| C:3 G:2 |"), ParseError);
  EXPECT_THROW(parse_chart("| C:3 |"), ParseError);
}

TEST(ChartParseTest, MixedDurationsRejected) {
  EXPECT_THROW(parse_chart("| C:2 G |"), ParseError);
}

TEST(ChartParseTest, SlashChordAndAccidentals) {
  ChordChart chart = parse_chart("| C/G | F#m7 | Bbmaj7 |");
  EXPECT_EQ(chart.bars[0][0].chord.bass, std::optional<int>(7));
  EXPECT_EQ(chart.bars[1][0].chord.root, 6);
  EXPECT_EQ(chart.bars[1][0].chord.quality, ChordQuality::min7);
  EXPECT_EQ(chart.bars[2][0].chord.root, 10);
  EXPECT_EQ(chart.bars[2][0].chord.quality, ChordQuality::maj7);
}

TEST(ChartParseTest, TwelveEightHeader) {
  ChordChart chart = parse_chart("12/8\n| C | G |");
  EXPECT_EQ(chart.time_signature, TimeSignature::twelve_eight);
}

TEST(ChartParseTest, RejectsJunk) {
  EXPECT_THROW(parse_chart(""), ParseError);
  EXPECT_THROW(parse_chart("| |"), ParseError);
  EXPECT_THROW(parse_chart("C F G"), ParseError);
  EXPECT_THROW(parse_chart("| C "), ParseError);
  EXPECT_THROW(parse_chart("3/4\n| C |"), ParseError);
  EXPECT_THROW(parse_chart("| Hm |"), ParseError);
}

TEST(ChartParseTest, MultiLineChart) {
  ChordChart chart = parse_chart("4/4\n| C | Am |\n| F | G7 |\n");
  EXPECT_EQ(chart.bar_count(), 4);
}

TEST(ChartParseTest, DurationSumInvariantHolds) {
  ChordChart chart = parse_chart("| C F | G:1.5 C:2.5 | Am Dm G7 C |");
  for (const auto& bar : chart.bars) {
    int sum = 0;
    for (const auto& tc : bar) sum += tc.duration_twelfths;
    EXPECT_EQ(sum, kTwelfthsPerBar);
  }
}

TEST(ChordSymbolTest, PitchClassTables) {
  EXPECT_EQ(pc_set({0, ChordQuality::maj, {}}), (std::set<int>{0, 4, 7}));
  // A min7: {0,3,7,10} transposed by 9.
  EXPECT_EQ(pc_set({9, ChordQuality::min7, {}}), (std::set<int>{9, 0, 4, 7}));
  // G dom7: {0,4,7,10} transposed by 7.
  EXPECT_EQ(pc_set({7, ChordQuality::dom7, {}}), (std::set<int>{7, 11, 2, 5}));
  EXPECT_EQ(pc_set({0, ChordQuality::dim, {}}), (std::set<int>{0, 3, 6}));
  EXPECT_EQ(pc_set({0, ChordQuality::aug, {}}), (std::set<int>{0, 4, 8}));
  EXPECT_EQ(pc_set({0, ChordQuality::sus4, {}}), (std::set<int>{0, 5, 7}));
  EXPECT_EQ(pc_set({0, ChordQuality::min7b5, {}}), (std::set<int>{0, 3, 6, 10}));
}

TEST(ChordSymbolTest, TransposeProperty) {
  Rng rng(7);
  const ChordQuality qualities[] = {ChordQuality::maj,  ChordQuality::min,
                                    ChordQuality::dom7, ChordQuality::maj7,
                                    ChordQuality::min7, ChordQuality::dim,
                                    ChordQuality::aug,  ChordQuality::sus4,
                                    ChordQuality::min7b5};
  for (int trial = 0; trial < 200; ++trial) {
    ChordSymbol c{static_cast<int>(rng.uniform_int(12)),
                  qualities[rng.uniform_int(9)],
                  {}};
    int k = static_cast<int>(rng.uniform_int(12));
    std::set<int> expected;
    for (int p : chord_pitch_classes(c)) expected.insert((p + k) % 12);
    EXPECT_EQ(pc_set(transpose(c, k)), expected);
  }
}

TEST(ChordChartTest, ChordAtLookup) {
  ChordChart chart = parse_chart("| C F | G |");
  EXPECT_EQ(chart.chord_at(0).root, 0);
  EXPECT_EQ(chart.chord_at(23).root, 0);
  EXPECT_EQ(chart.chord_at(24).root, 5);
  EXPECT_EQ(chart.chord_at(48).root, 7);
  EXPECT_EQ(chart.chord_at(96).root, 0);  // wraps
}

}  // namespace
}  // namespace stylox
