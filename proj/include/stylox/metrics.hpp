// Objective evaluation: chroma-based content preservation and the
// (onset-difference, pitch-interval) style profile with its macro / per-song
// cosine fits, plus profile clustering.
//
// Style profile: all ordered note-onset pairs less than 4 beats apart and at
// most 20 semitones apart, binned at 6 bins per beat x 1 bin per semitone
// (24 x 41 = 984 bins), L1-normalized. Pairs never cross track or segment
// boundaries; statistics pool across segments before normalization.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "stylox/codec.hpp"
#include "stylox/note.hpp"
#include "stylox/rng.hpp"

namespace stylox {

constexpr int kChromaFramesPerBeat = 12;
constexpr int kChromaWindow = 24;  // frames (2 beats)
constexpr int kChromaStride = 12;  // frames (1 beat)
constexpr int kProfileTimeBins = 24;      // 4 beats x 6 bins per beat
constexpr int kProfileIntervalBins = 41;  // -20 .. +20 semitones
constexpr int kProfileSize = kProfileTimeBins * kProfileIntervalBins;  // 984

/// Smoothed chroma: one 12-dim non-negative frame per beat (averaging
/// window of 2 beats, stride 1 beat, windows fully inside the segment).
struct ChromaSequence {
  std::vector<std::array<double, 12>> frames;
};

/// Count-weighted chroma at 12 frames per beat, then smoothed. A segment of
/// B beats yields B-1 smoothed frames.
inline ChromaSequence chroma(const Segment& seg) {
  int raw_frames = seg.bars * kBeatsPerBar * kChromaFramesPerBeat;
  std::vector<std::array<double, 12>> raw(static_cast<size_t>(raw_frames),
                                          std::array<double, 12>{});
  for (const Note& n : seg.notes.notes) {
    int lo = static_cast<int>(std::floor(n.onset * kChromaFramesPerBeat + 1e-9));
    int hi = static_cast<int>(std::ceil(n.offset * kChromaFramesPerBeat - 1e-9));
    lo = std::max(lo, 0);
    hi = std::min(hi, raw_frames);
    int pc = ((n.pitch % 12) + 12) % 12;
    for (int f = lo; f < hi; ++f) raw[f][pc] += 1.0;
  }
  ChromaSequence out;
  for (int start = 0; start + kChromaWindow <= raw_frames; start += kChromaStride) {
    std::array<double, 12> acc{};
    for (int f = start; f < start + kChromaWindow; ++f)
      for (int k = 0; k < 12; ++k) acc[k] += raw[f][k];
    for (int k = 0; k < 12; ++k) acc[k] /= kChromaWindow;
    out.frames.push_back(acc);
  }
  return out;
}

namespace metrics_detail {

template <typename Vec>
double cosine(const Vec& a, const Vec& b) {
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace metrics_detail

/// Mean frame-wise cosine similarity between the smoothed chroma of two
/// equal-length segments. Frames where exactly one side is silent score 0;
/// frames where both are silent score 1.
inline double content_preservation(const Segment& out, const Segment& source) {
  ChromaSequence a = chroma(out);
  ChromaSequence b = chroma(source);
  if (a.frames.size() != b.frames.size())
    throw std::invalid_argument("content_preservation: segment lengths differ");
  if (a.frames.empty()) return 1.0;
  double total = 0;
  for (size_t f = 0; f < a.frames.size(); ++f) {
    double na = 0, nb = 0;
    for (int k = 0; k < 12; ++k) {
      na += a.frames[f][k];
      nb += b.frames[f][k];
    }
    if (na == 0 && nb == 0)
      total += 1.0;
    else if (na == 0 || nb == 0)
      total += 0.0;
    else
      total += metrics_detail::cosine(a.frames[f], b.frames[f]);
  }
  return total / static_cast<double>(a.frames.size());
}

/// 984-dim normalized histogram (all-zero when no pairs).
struct StyleProfile {
  std::vector<double> v = std::vector<double>(kProfileSize, 0.0);

  bool zero() const {
    for (double x : v)
      if (x != 0) return false;
    return true;
  }
};

/// Accumulates pair counts; one add() call is one boundary unit (pairs never
/// cross calls). Aggregate as many segments/tracks as needed, then take
/// profile().
class ProfileAccumulator {
 public:
  void add(const NoteList& track) {
    const auto& notes = track.notes;
    for (size_t i = 0; i < notes.size(); ++i) {
      for (size_t j = 0; j < notes.size(); ++j) {
        if (i == j) continue;
        double dt = notes[j].onset - notes[i].onset;
        if (dt < 0 || dt >= 4.0) continue;
        int dp = notes[j].pitch - notes[i].pitch;
        if (dp < -20 || dp > 20) continue;
        int tbin = static_cast<int>(std::floor(dt * 6.0 + 1e-9));
        if (tbin >= kProfileTimeBins) continue;
        counts_[static_cast<size_t>(tbin) * kProfileIntervalBins + (dp + 20)] += 1;
      }
    }
  }
  void add(const Segment& seg) { add(seg.notes); }

  uint64_t total() const {
    uint64_t t = 0;
    for (uint64_t c : counts_) t += c;
    return t;
  }
  const std::vector<uint64_t>& counts() const { return counts_; }

  StyleProfile profile() const {
    StyleProfile p;
    uint64_t t = total();
    if (t == 0) return p;
    for (size_t i = 0; i < counts_.size(); ++i)
      p.v[i] = static_cast<double>(counts_[i]) / static_cast<double>(t);
    return p;
  }

 private:
  std::vector<uint64_t> counts_ = std::vector<uint64_t>(kProfileSize, 0);
};

/// Profile of a collection of tracks (each track is one boundary unit).
inline StyleProfile style_profile(const std::vector<NoteList>& tracks) {
  ProfileAccumulator acc;
  for (const NoteList& t : tracks) acc.add(t);
  return acc.profile();
}

inline double profile_cosine(const StyleProfile& a, const StyleProfile& b) {
  return metrics_detail::cosine(a.v, b.v);
}

struct StyleFit {
  double value = 0;
  bool flagged = false;  // zero output profile
};

/// Macro style fit: profile pooled over all outputs vs the reference.
inline StyleFit style_fit_macro(const std::vector<Segment>& outputs,
                                const StyleProfile& reference) {
  if (reference.zero()) throw std::invalid_argument("style_fit_macro: zero reference profile");
  ProfileAccumulator acc;
  for (const Segment& s : outputs) acc.add(s);
  StyleProfile p = acc.profile();
  if (p.zero()) return {0.0, true};
  return {profile_cosine(p, reference), false};
}

struct SongStyleFit {
  double mean = 0;
  double stddev = 0;  // population standard deviation over songs
  int flagged_songs = 0;
};

/// Song style fit: one pooled profile per song, cosine to the reference,
/// mean and standard deviation over songs.
inline SongStyleFit style_fit_song(const std::vector<std::vector<Segment>>& outputs_by_song,
                                   const StyleProfile& reference) {
  if (reference.zero()) throw std::invalid_argument("style_fit_song: zero reference profile");
  if (outputs_by_song.empty()) return {};
  SongStyleFit fit;
  std::vector<double> values;
  for (const auto& song : outputs_by_song) {
    ProfileAccumulator acc;
    for (const Segment& s : song) acc.add(s);
    StyleProfile p = acc.profile();
    if (p.zero()) {
      ++fit.flagged_songs;
      values.push_back(0.0);
    } else {
      values.push_back(profile_cosine(p, reference));
    }
  }
  double sum = 0;
  for (double v : values) sum += v;
  fit.mean = sum / static_cast<double>(values.size());
  double sq = 0;
  for (double v : values) sq += (v - fit.mean) * (v - fit.mean);
  fit.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return fit;
}

/// Derangement-preferring permutation within a set of indices: a uniformly
/// random single cycle (Sattolo's algorithm), so no element maps to itself
/// for n >= 2.
inline std::vector<size_t> randomized_pairing(size_t n, Rng& rng) {
  std::vector<size_t> perm(n);
  for (size_t i = 0; i < n; ++i) perm[i] = i;
  for (size_t i = n; i > 1; --i) {
    size_t j = rng.uniform_int(i - 1);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

/// Pairwise cosine matrix plus an average-linkage dendrogram leaf order.
struct SimilarityMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> cos;  // symmetric, unit diagonal
  std::vector<int> leaf_order;
};

inline SimilarityMatrix profile_similarity_matrix(
    const std::vector<std::pair<std::string, StyleProfile>>& profiles) {
  size_t n = profiles.size();
  if (n < 2) throw std::invalid_argument("profile_similarity_matrix: need at least 2 profiles");
  SimilarityMatrix out;
  for (const auto& [name, p] : profiles) out.names.push_back(name);
  out.cos.assign(n, std::vector<double>(n, 1.0));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      double c = profile_cosine(profiles[i].second, profiles[j].second);
      out.cos[i][j] = out.cos[j][i] = c;
    }

  // Average-linkage agglomerative clustering on distance 1 - cos. Exact
  // averages over leaf pairs; ties break on creation order.
  struct Cluster {
    std::vector<int> leaves;
    bool alive = true;
  };
  std::vector<Cluster> clusters(n);
  for (size_t i = 0; i < n; ++i) clusters[i].leaves = {static_cast<int>(i)};
  auto avg_dist = [&](const Cluster& a, const Cluster& b) {
    double sum = 0;
    for (int x : a.leaves)
      for (int y : b.leaves) sum += 1.0 - out.cos[x][y];
    return sum / (static_cast<double>(a.leaves.size()) * b.leaves.size());
  };
  for (size_t merges = 0; merges + 1 < n; ++merges) {
    double best = 0;
    int bi = -1, bj = -1;
    for (size_t i = 0; i < clusters.size(); ++i) {
      if (!clusters[i].alive) continue;
      for (size_t j = i + 1; j < clusters.size(); ++j) {
        if (!clusters[j].alive) continue;
        double d = avg_dist(clusters[i], clusters[j]);
        if (bi < 0 || d < best - 1e-15) {
          best = d;
          bi = static_cast<int>(i);
          bj = static_cast<int>(j);
        }
      }
    }
    Cluster merged;
    merged.leaves = clusters[bi].leaves;
    merged.leaves.insert(merged.leaves.end(), clusters[bj].leaves.begin(),
                         clusters[bj].leaves.end());
    clusters[bi].alive = false;
    clusters[bj].alive = false;
    clusters.push_back(std::move(merged));
  }
  out.leaf_order = clusters.back().leaves;
  return out;
}

}  // namespace stylox
