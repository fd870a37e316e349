// Metric tests: chroma and content preservation, style-profile geometry
// against a brute-force oracle, invariances, fits, and clustering.

#include "stylox/metrics.hpp"

#include <cmath>
#include <set>

#include "gtest/gtest.h"
#include "stylox/arranger.hpp"
#include "stylox/codec.hpp"

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

/// Independent O(n^2) oracle for the style profile: literal enumeration of
/// the ordered-pair multiset, kept free of the ProfileAccumulator path.
std::vector<uint64_t> brute_force_counts(const std::vector<NoteList>& tracks) {
  std::vector<uint64_t> counts(kProfileSize, 0);
  for (const NoteList& track : tracks) {
    const auto& notes = track.notes;
    for (size_t a = 0; a < notes.size(); ++a)
      for (size_t b = 0; b < notes.size(); ++b) {
        if (a == b) continue;
        double dt = notes[b].onset - notes[a].onset;
        int dp = notes[b].pitch - notes[a].pitch;
        if (!(dt >= 0 && dt < 4.0)) continue;
        if (std::abs(dp) > 20) continue;
        int tbin = static_cast<int>(std::floor(dt * 6.0 + 1e-9));
        if (tbin > 23) continue;
        counts[tbin * 41 + dp + 20] += 1;
      }
  }
  return counts;
}

std::vector<uint64_t> accum_counts(const std::vector<NoteList>& tracks) {
  ProfileAccumulator acc;
  for (const auto& t : tracks) acc.add(t);
  return acc.counts();
}

NoteList random_track(Rng& rng, int max_notes = 20) {
  NoteList t;
  size_t n = rng.uniform_int(max_notes + 1);
  for (size_t i = 0; i < n; ++i) {
    double on = rng.uniform() * 30.0;
    t.notes.push_back({static_cast<int>(20 + rng.uniform_int(88)), on, on + 0.1 + rng.uniform()});
  }
  t.sort();
  return t;
}

// --- chroma ---

TEST(ChromaTest, SingleLongNoteIsUnitChroma) {
  ChromaSequence c = chroma(seg_of({{60, 0.0, 32.0}}));
  ASSERT_EQ(c.frames.size(), 31u);  // 32 beats -> 31 fully-contained windows
  for (const auto& f : c.frames) {
    EXPECT_DOUBLE_EQ(f[0], 1.0);
    for (int k = 1; k < 12; ++k) EXPECT_DOUBLE_EQ(f[k], 0.0);
  }
}

TEST(ChromaTest, EmptySegmentAllZero) {
  ChromaSequence c = chroma(seg_of({}));
  ASSERT_EQ(c.frames.size(), 31u);
  for (const auto& f : c.frames)
    for (double v : f) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(ChromaTest, TransitionHasOneMixedWindow) {
  ChromaSequence c = chroma(seg_of({{60, 0.0, 16.0}, {67, 16.0, 32.0}}));
  ASSERT_EQ(c.frames.size(), 31u);
  for (int f = 0; f < 15; ++f) {
    EXPECT_DOUBLE_EQ(c.frames[f][0], 1.0) << f;
    EXPECT_DOUBLE_EQ(c.frames[f][7], 0.0) << f;
  }
  EXPECT_DOUBLE_EQ(c.frames[15][0], 0.5);  // window [15, 17) straddles the change
  EXPECT_DOUBLE_EQ(c.frames[15][7], 0.5);
  for (int f = 16; f < 31; ++f) {
    EXPECT_DOUBLE_EQ(c.frames[f][0], 0.0) << f;
    EXPECT_DOUBLE_EQ(c.frames[f][7], 1.0) << f;
  }
}

// --- content preservation ---

TEST(ContentPreservationTest, IdenticalSegmentsScoreOne) {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    Segment s = seg_of(random_track(rng, 15).notes);
    if (s.empty()) continue;
    EXPECT_DOUBLE_EQ(content_preservation(s, s), 1.0);
  }
}

TEST(ContentPreservationTest, AgainstEmptyScoresZero) {
  Segment busy = seg_of({{60, 0.0, 32.0}});
  EXPECT_DOUBLE_EQ(content_preservation(seg_of({}), busy), 0.0);
  EXPECT_DOUBLE_EQ(content_preservation(busy, seg_of({})), 0.0);
  EXPECT_DOUBLE_EQ(content_preservation(seg_of({}), seg_of({})), 1.0);
}

TEST(ContentPreservationTest, SymmetricInArguments) {
  Rng rng(32);
  for (int trial = 0; trial < 10; ++trial) {
    Segment a = seg_of(random_track(rng).notes);
    Segment b = seg_of(random_track(rng).notes);
    EXPECT_DOUBLE_EQ(content_preservation(a, b), content_preservation(b, a));
  }
}

TEST(ContentPreservationTest, SharedTranspositionInvariant) {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    NoteList ta = random_track(rng), tb = random_track(rng);
    int k = 1 + static_cast<int>(rng.uniform_int(11));
    auto shift = [&](const NoteList& t) {
      NoteList out = t;
      for (Note& n : out.notes) n.pitch = std::min(127, n.pitch + k);
      return out;
    };
    double base = content_preservation(seg_of(ta.notes), seg_of(tb.notes));
    double moved = content_preservation(seg_of(shift(ta).notes), seg_of(shift(tb).notes));
    EXPECT_NEAR(base, moved, 1e-12);
  }
}

TEST(ContentPreservationTest, TritoneDropsStrictly) {
  // C major triad arpeggio vs itself transposed a tritone: pitch-class sets
  // are disjoint, so similarity collapses.
  std::vector<Note> notes;
  for (int beat = 0; beat < 32; ++beat)
    notes.push_back({60 + std::array<int, 3>{0, 4, 7}[beat % 3], beat * 1.0, beat + 1.0});
  Segment base = seg_of(notes);
  std::vector<Note> moved = notes;
  for (Note& n : moved) n.pitch += 6;
  EXPECT_DOUBLE_EQ(content_preservation(base, base), 1.0);
  EXPECT_LT(content_preservation(seg_of(moved), base), 0.01);
}

// --- style profile ---

TEST(StyleProfileTest, VectorLengthIs984) {
  EXPECT_EQ(kProfileSize, 984);
  EXPECT_EQ(style_profile({}).v.size(), 984u);
}

TEST(StyleProfileTest, SinglePairLandsInExpectedBin) {
  StyleProfile p = style_profile({track_of({{60, 0.0, 0.5}, {64, 1.0, 1.5}})});
  EXPECT_DOUBLE_EQ(p.v[6 * 41 + 24], 1.0);  // dt = 1 beat -> bin 6; dp = +4 -> bin 24
  double sum = 0;
  for (double v : p.v) sum += v;
  EXPECT_DOUBLE_EQ(sum, 1.0);
}

TEST(StyleProfileTest, SimultaneousNotesCountBothOrders) {
  StyleProfile p = style_profile({track_of({{60, 0.0, 1.0}, {64, 0.0, 1.0}})});
  EXPECT_DOUBLE_EQ(p.v[0 * 41 + 24], 0.5);  // +4
  EXPECT_DOUBLE_EQ(p.v[0 * 41 + 16], 0.5);  // -4
}

TEST(StyleProfileTest, EmptyInputIsZeroVector) {
  EXPECT_TRUE(style_profile({}).zero());
  EXPECT_TRUE(style_profile({NoteList{}}).zero());
}

TEST(StyleProfileTest, BruteForceOracleEquivalence) {
  Rng rng(34);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<NoteList> tracks;
    size_t k = 1 + rng.uniform_int(3);
    for (size_t i = 0; i < k; ++i) tracks.push_back(random_track(rng, 20));
    EXPECT_EQ(accum_counts(tracks), brute_force_counts(tracks)) << "trial " << trial;
  }
}

TEST(StyleProfileTest, TranspositionAndTimeShiftInvariance) {
  Rng rng(35);
  for (int trial = 0; trial < 30; ++trial) {
    NoteList t = random_track(rng);
    int k = static_cast<int>(rng.uniform_int(13)) - 6;
    double dt = rng.uniform() * 10.0;
    NoteList moved = t;
    for (Note& n : moved.notes) {
      n.pitch = std::clamp(n.pitch + k, 0, 127);
      n.onset += dt;
      n.offset += dt;
    }
    bool clipped = false;
    for (size_t i = 0; i < t.notes.size(); ++i)
      if (moved.notes[i].pitch - t.notes[i].pitch != k) clipped = true;
    if (clipped) continue;
    EXPECT_EQ(accum_counts({moved}), accum_counts({t}));
  }
}

TEST(StyleProfileTest, TrackPermutationInvariance) {
  Rng rng(36);
  NoteList a = random_track(rng), b = random_track(rng), c = random_track(rng);
  EXPECT_EQ(accum_counts({a, b, c}), accum_counts({c, a, b}));
}

TEST(StyleProfileTest, PairsDoNotCrossSegments) {
  // As one track: the (0.0 -> 1.0) pair exists. As two segments: it must not.
  NoteList whole = track_of({{60, 0.0, 0.5}, {64, 1.0, 1.5}});
  ProfileAccumulator split;
  split.add(track_of({{60, 0.0, 0.5}}));
  split.add(track_of({{64, 1.0, 1.5}}));
  EXPECT_GT(accum_counts({whole})[6 * 41 + 24], 0u);
  EXPECT_EQ(split.total(), 0u);
}

// --- style fits ---

TEST(StyleFitTest, ReferenceAgainstItselfIsOne) {
  Rng rng(37);
  std::vector<Segment> segs;
  for (int i = 0; i < 5; ++i) segs.push_back(seg_of(random_track(rng, 15).notes));
  ProfileAccumulator acc;
  for (const Segment& s : segs) acc.add(s);
  StyleProfile ref = acc.profile();
  ASSERT_FALSE(ref.zero());
  StyleFit fit = style_fit_macro(segs, ref);
  EXPECT_NEAR(fit.value, 1.0, 1e-12);
  EXPECT_FALSE(fit.flagged);
}

TEST(StyleFitTest, EmptyOutputsFlagged) {
  StyleProfile ref;
  ref.v[0] = 1.0;
  StyleFit fit = style_fit_macro({seg_of({})}, ref);
  EXPECT_DOUBLE_EQ(fit.value, 0.0);
  EXPECT_TRUE(fit.flagged);
}

TEST(StyleFitTest, SongFitMomentsBehave) {
  Rng rng(38);
  std::vector<Segment> song;
  for (int i = 0; i < 3; ++i) song.push_back(seg_of(random_track(rng, 15).notes));
  ProfileAccumulator acc;
  for (const Segment& s : song) acc.add(s);
  StyleProfile ref = acc.profile();

  SongStyleFit single = style_fit_song({song}, ref);
  EXPECT_DOUBLE_EQ(single.stddev, 0.0);  // one song
  SongStyleFit twice = style_fit_song({song, song}, ref);
  EXPECT_DOUBLE_EQ(twice.stddev, 0.0);  // identical songs
  EXPECT_NEAR(twice.mean, style_fit_macro(song, ref).value, 1e-12);
  EXPECT_LE(twice.mean, 1.0 + 1e-12);
}

TEST(RandomizedPairingTest, SattoloDerangement) {
  Rng rng(39);
  for (size_t n : {2u, 3u, 7u, 20u}) {
    auto perm = randomized_pairing(n, rng);
    std::set<size_t> seen(perm.begin(), perm.end());
    EXPECT_EQ(seen.size(), n);  // bijection
    for (size_t i = 0; i < n; ++i) EXPECT_NE(perm[i], i);  // derangement
  }
  EXPECT_EQ(randomized_pairing(1, rng), std::vector<size_t>{0});
}

TEST(RandomizedPairingTest, PermutationPreservesPooledProfile) {
  // The permuted set is the same multiset of segments, so the aggregated
  // profile (and thus macro style fit) is unchanged.
  Rng rng(40);
  std::vector<Segment> refs;
  for (int i = 0; i < 6; ++i) refs.push_back(seg_of(random_track(rng, 15).notes));
  ProfileAccumulator a, b;
  auto perm = randomized_pairing(refs.size(), rng);
  for (size_t i = 0; i < refs.size(); ++i) {
    a.add(refs[i]);
    b.add(refs[perm[i]]);
  }
  EXPECT_EQ(a.counts(), b.counts());
}

// --- clustering ---

TEST(SimilarityMatrixTest, IdenticalProfilesAllOnes) {
  StyleProfile p;
  p.v[5] = 0.5;
  p.v[100] = 0.5;
  auto m = profile_similarity_matrix({{"a", p}, {"b", p}, {"c", p}});
  for (const auto& row : m.cos)
    for (double v : row) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(SimilarityMatrixTest, SymmetricUnitDiagonal) {
  Rng rng(41);
  std::vector<std::pair<std::string, StyleProfile>> profiles;
  for (int i = 0; i < 5; ++i) {
    ProfileAccumulator acc;
    acc.add(random_track(rng, 15));
    acc.add(random_track(rng, 15));
    profiles.push_back({"p" + std::to_string(i), acc.profile()});
  }
  auto m = profile_similarity_matrix(profiles);
  for (size_t i = 0; i < profiles.size(); ++i) {
    EXPECT_DOUBLE_EQ(m.cos[i][i], 1.0);
    for (size_t j = 0; j < profiles.size(); ++j) EXPECT_DOUBLE_EQ(m.cos[i][j], m.cos[j][i]);
  }
}

TEST(SimilarityMatrixTest, TwoFamilyToyProfilesSplit) {
  // Hand-built: two pairs of near-identical profiles, interleaved on input.
  auto mk = [](std::initializer_list<std::pair<int, double>> bins) {
    StyleProfile p;
    for (auto [i, v] : bins) p.v[i] = v;
    return p;
  };
  StyleProfile a1 = mk({{0, 0.9}, {50, 0.1}});
  StyleProfile a2 = mk({{0, 0.8}, {50, 0.2}});
  StyleProfile b1 = mk({{500, 0.9}, {600, 0.1}});
  StyleProfile b2 = mk({{500, 0.8}, {600, 0.2}});
  auto m = profile_similarity_matrix({{"a1", a1}, {"b1", b1}, {"a2", a2}, {"b2", b2}});
  // Leaf order groups the two families contiguously.
  auto family = [&](int leaf) { return m.names[leaf][0]; };
  ASSERT_EQ(m.leaf_order.size(), 4u);
  EXPECT_EQ(family(m.leaf_order[0]), family(m.leaf_order[1]));
  EXPECT_EQ(family(m.leaf_order[2]), family(m.leaf_order[3]));
  EXPECT_NE(family(m.leaf_order[0]), family(m.leaf_order[2]));
}

TEST(SimilarityMatrixTest, NeedsTwoProfiles) {
  StyleProfile p;
  p.v[0] = 1;
  EXPECT_THROW(profile_similarity_matrix({{"only", p}}), std::invalid_argument);
}

// --- built-in style families look like families ---

TEST(BuiltinFamilyTest, WithinFamilySimilarityExceedsCross) {
  ChordChart chart = parse_chart("| C | Am | F | G7 | C | F | C/G | G |");
  std::vector<std::pair<std::string, StyleProfile>> profiles;
  for (const StyleSpec& style : builtin_styles()) {
    ProfileAccumulator acc;
    for (uint64_t seed = 0; seed < 4; ++seed) {
      NoteList bass = render(chart, style, Role::bass, seed);
      for (const Segment& s : segment(bass)) acc.add(s);
    }
    profiles.push_back({style.name, acc.profile()});
  }
  double within = 0, cross = 0;
  int nw = 0, nc = 0;
  for (size_t i = 0; i < profiles.size(); ++i)
    for (size_t j = i + 1; j < profiles.size(); ++j) {
      double c = profile_cosine(profiles[i].second, profiles[j].second);
      if (style_family(profiles[i].first) == style_family(profiles[j].first)) {
        within += c;
        ++nw;
      } else {
        cross += c;
        ++nc;
      }
    }
  ASSERT_GT(nw, 0);
  ASSERT_GT(nc, 0);
  EXPECT_GT(within / nw, cross / nc + 0.1);
}

}  // namespace
}  // namespace stylox
