// Core music types: notes in fractional beats, per-role tracks, songs.

#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace stylox {

/// Time signatures supported by the whole pipeline. In 12/8 the beat unit is
/// the dotted quarter, so bars have 4 beats in both signatures.
enum class TimeSignature { four_four, twelve_eight };

inline std::string time_signature_name(TimeSignature ts) {
  return ts == TimeSignature::four_four ? "4/4" : "12/8";
}

constexpr int kBeatsPerBar = 4;
constexpr int kTwelfthsPerBeat = 12;
constexpr int kTwelfthsPerBar = kBeatsPerBar * kTwelfthsPerBeat;

/// A note with pitch and onset/offset measured in fractional beats.
struct Note {
  int pitch = 0;       // MIDI note number, 0-127
  double onset = 0.0;  // beats, >= 0
  double offset = 0.0; // beats, > onset

  bool operator==(const Note&) const = default;
};

inline bool note_order(const Note& a, const Note& b) {
  if (a.onset != b.onset) return a.onset < b.onset;
  if (a.pitch != b.pitch) return a.pitch < b.pitch;
  return a.offset < b.offset;
}

/// An ordered track of notes, sorted by (onset, pitch).
struct NoteList {
  std::vector<Note> notes;
  TimeSignature time_signature = TimeSignature::four_four;

  void sort() { std::stable_sort(notes.begin(), notes.end(), note_order); }

  bool operator==(const NoteList&) const = default;
};

/// Validates note invariants; throws std::invalid_argument on violation.
inline void validate(const NoteList& track) {
  for (const Note& n : track.notes) {
    if (n.pitch < 0 || n.pitch > 127)
      throw std::invalid_argument("note pitch out of range: " + std::to_string(n.pitch));
    if (!(n.offset > n.onset))
      throw std::invalid_argument("note with offset <= onset");
    if (n.onset < 0.0) throw std::invalid_argument("note with negative onset");
  }
}

/// Instrument roles a track can carry. Drums are kept separate so that
/// "all non-drum" selections are well defined.
enum class Role { bass, piano, guitar, strings, other, drums };

inline const std::vector<Role>& all_roles() {
  static const std::vector<Role> roles = {Role::bass,    Role::piano, Role::guitar,
                                          Role::strings, Role::other, Role::drums};
  return roles;
}

inline std::string role_name(Role r) {
  switch (r) {
    case Role::bass: return "bass";
    case Role::piano: return "piano";
    case Role::guitar: return "guitar";
    case Role::strings: return "strings";
    case Role::other: return "other";
    case Role::drums: return "drums";
  }
  return "other";
}

inline Role role_from_name(const std::string& name) {
  for (Role r : all_roles())
    if (role_name(r) == name) return r;
  throw std::invalid_argument("unknown role name: " + name);
}

/// A multi-track piece: one NoteList per role, all sharing a time signature.
struct Song {
  std::map<Role, NoteList> tracks;
  TimeSignature time_signature = TimeSignature::four_four;

  NoteList& track(Role r) {
    auto it = tracks.find(r);
    if (it == tracks.end()) {
      it = tracks.emplace(r, NoteList{{}, time_signature}).first;
    }
    return it->second;
  }

  bool operator==(const Song&) const = default;
};

enum class TrackSelector { bass, piano, all };

inline std::string selector_name(TrackSelector s) {
  switch (s) {
    case TrackSelector::bass: return "bass";
    case TrackSelector::piano: return "piano";
    case TrackSelector::all: return "all";
  }
  return "all";
}

inline TrackSelector selector_from_name(const std::string& name) {
  if (name == "bass") return TrackSelector::bass;
  if (name == "piano") return TrackSelector::piano;
  if (name == "all") return TrackSelector::all;
  throw std::invalid_argument("unknown track selector: " + name);
}

}  // namespace stylox
