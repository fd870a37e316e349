// SMF reader/writer tests: unit conversion, FIFO note pairing, role
// mapping, and the read/write round-trip property.

#include "stylox/midi_io.hpp"

#include <vector>

#include "gtest/gtest.h"
#include "stylox/rng.hpp"

namespace stylox {
namespace {

// --- Test helpers: hand-assembled SMF bytes ---

void put_u32(std::vector<uint8_t>& v, uint32_t x) {
  for (int i = 3; i >= 0; --i) v.push_back((x >> (8 * i)) & 0xff);
}
void put_u16(std::vector<uint8_t>& v, uint16_t x) {
  v.push_back(x >> 8);
  v.push_back(x & 0xff);
}

std::vector<uint8_t> smf_with_track(const std::vector<uint8_t>& track_body, uint16_t tpq = 480) {
  std::vector<uint8_t> out = {'M', 'T', 'h', 'd'};
  put_u32(out, 6);
  put_u16(out, 0);
  put_u16(out, 1);
  put_u16(out, tpq);
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  std::vector<uint8_t> body = track_body;
  body.insert(body.end(), {0x00, 0xff, 0x2f, 0x00});
  put_u32(out, static_cast<uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Song make_song(std::vector<Note> notes, Role role = Role::piano,
               TimeSignature ts = TimeSignature::four_four) {
  Song s;
  s.time_signature = ts;
  NoteList t;
  t.time_signature = ts;
  t.notes = std::move(notes);
  t.sort();
  s.tracks[role] = std::move(t);
  return s;
}

// --- Tests ---

TEST(MidiReadTest, SingleNoteTickConversion) {
  // note-on C4 at tick 0, note-off at tick 480, 480 tpq -> Note{60, 0, 1}
  std::vector<uint8_t> body = {
      0x00, 0x90, 60, 100,        // on
      0x83, 0x60, 0x80, 60, 0,    // delta 480, off
  };
  Song song = read_midi(smf_with_track(body));
  ASSERT_TRUE(song.tracks.count(Role::piano));
  const auto& notes = song.tracks.at(Role::piano).notes;
  ASSERT_EQ(notes.size(), 1u);
  EXPECT_EQ(notes[0], (Note{60, 0.0, 1.0}));
}

TEST(MidiReadTest, OverlappingSamePitchFifo) {
  // Two overlapping note-ons at the same pitch pair first-in-first-out.
  std::vector<uint8_t> body = {
      0x00, 0x90, 60, 100,       // on at 0
      0x60, 0x90, 60, 100,       // on at 96
      0x60, 0x80, 60, 0,         // off at 192 -> closes the tick-0 note
      0x60, 0x80, 60, 0,         // off at 288 -> closes the tick-96 note
  };
  Song song = read_midi(smf_with_track(body));
  const auto& notes = song.tracks.at(Role::piano).notes;
  ASSERT_EQ(notes.size(), 2u);
  EXPECT_DOUBLE_EQ(notes[0].onset, 0.0);
  EXPECT_DOUBLE_EQ(notes[0].offset, 0.4);
  EXPECT_DOUBLE_EQ(notes[1].onset, 0.2);
  EXPECT_DOUBLE_EQ(notes[1].offset, 0.6);
}

TEST(MidiReadTest, RejectsThreeFourTime) {
  std::vector<uint8_t> body = {0x00, 0xff, 0x58, 0x04, 3, 2, 24, 8};
  try {
    read_midi(smf_with_track(body));
    FAIL() << "expected MidiError";
  } catch (const MidiError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported time signature"), std::string::npos);
  }
}

TEST(MidiReadTest, TwelveEightUsesDottedQuarterBeat) {
  std::vector<uint8_t> body = {
      0x00, 0xff, 0x58, 0x04, 12, 3, 36, 8,  // 12/8
      0x00, 0x90, 40, 100,
      0x85, 0x50, 0x80, 40, 0,  // delta 720 ticks = 1 dotted quarter at 480 tpq
  };
  Song song = read_midi(smf_with_track(body));
  EXPECT_EQ(song.time_signature, TimeSignature::twelve_eight);
  const auto& notes = song.tracks.at(Role::piano).notes;
  ASSERT_EQ(notes.size(), 1u);
  EXPECT_DOUBLE_EQ(notes[0].offset, 1.0);
}

TEST(MidiReadTest, DanglingNoteOnClosedWithWarning) {
  std::vector<uint8_t> body = {
      0x00, 0x90, 60, 100,
      0x83, 0x60, 0x90, 62, 100,  // second note-on; first never closed
      0x83, 0x60, 0x80, 62, 0,
  };
  std::vector<std::string> warnings;
  Song song = read_midi(smf_with_track(body), &warnings);
  EXPECT_EQ(song.tracks.at(Role::piano).notes.size(), 2u);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("dangling note-on"), std::string::npos);
}

TEST(MidiReadTest, MalformedHeaderReportsOffset) {
  std::vector<uint8_t> junk = {'M', 'T', 'x', 'd', 0, 0, 0, 6};
  try {
    read_midi(junk);
    FAIL() << "expected MidiError";
  } catch (const MidiError& e) {
    EXPECT_EQ(e.offset(), 0u);
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
  }
}

TEST(MidiReadTest, ProgramFamiliesMapToRoles) {
  std::vector<uint8_t> body = {
      0x00, 0xc0, 33,            // fingered bass on channel 0
      0x00, 0x90, 40, 100,
      0x60, 0x80, 40, 0,
      0x00, 0xc1, 19,            // church organ on channel 1 -> piano class
      0x00, 0x91, 60, 100,
      0x60, 0x81, 60, 0,
      0x00, 0x99, 36, 100,       // channel 10 -> drums
      0x60, 0x89, 36, 0,
  };
  Song song = read_midi(smf_with_track(body));
  EXPECT_EQ(song.tracks.at(Role::bass).notes.size(), 1u);
  EXPECT_EQ(song.tracks.at(Role::piano).notes.size(), 1u);
  EXPECT_EQ(song.tracks.at(Role::drums).notes.size(), 1u);
}

TEST(MidiWriteTest, EmptySongIsValidSmf) {
  Song song;
  auto bytes = write_midi(song);
  Song back = read_midi(bytes);
  EXPECT_TRUE(back.tracks.empty());
  EXPECT_EQ(back.time_signature, TimeSignature::four_four);
}

TEST(MidiWriteTest, SingleNoteTicks) {
  Song song = make_song({{60, 0.0, 1.0}});
  auto bytes = write_midi(song);
  Song back = read_midi(bytes);
  ASSERT_EQ(back.tracks.at(Role::piano).notes.size(), 1u);
  EXPECT_EQ(back.tracks.at(Role::piano).notes[0], (Note{60, 0.0, 1.0}));
}

TEST(MidiWriteTest, RoundTripRandomSongs) {
  // Identity holds for grid-quantized songs without same-pitch overlap
  // (overlapping identical pitches have no unambiguous MIDI pairing).
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    Song song;
    song.time_signature = trial % 4 == 0 ? TimeSignature::twelve_eight : TimeSignature::four_four;
    for (Role role : {Role::bass, Role::piano, Role::drums}) {
      NoteList track;
      track.time_signature = song.time_signature;
      std::map<int, int> last_off;
      for (int i = 0; i < 50; ++i) {
        // Onsets/durations on the 480-tick grid (here: multiples of 1/12 beat).
        int on12 = static_cast<int>(rng.uniform_int(32 * 12));
        int dur12 = 1 + static_cast<int>(rng.uniform_int(47));
        int pitch = static_cast<int>(24 + rng.uniform_int(80));
        if (on12 < last_off[pitch]) continue;
        last_off[pitch] = on12 + dur12;
        track.notes.push_back({pitch, on12 / 12.0, (on12 + dur12) / 12.0});
      }
      track.sort();
      song.tracks[role] = std::move(track);
    }
    auto bytes = write_midi(song);
    Song back = read_midi(bytes);
    EXPECT_EQ(back, song) << "round-trip mismatch in trial " << trial;
  }
}

TEST(ExtractTrackTest, AllExcludesDrums) {
  Song song = make_song({{60, 0, 1}, {64, 0, 1}, {67, 1, 2}});
  NoteList drums;
  for (int i = 0; i < 9; ++i) drums.notes.push_back({36, i * 0.5, i * 0.5 + 0.25});
  song.tracks[Role::drums] = drums;
  NoteList all = extract_track(song, TrackSelector::all);
  EXPECT_EQ(all.notes.size(), 3u);
}

TEST(ExtractTrackTest, MissingRoleGivesEmptyList) {
  Song song = make_song({{60, 0, 1}});
  NoteList bass = extract_track(song, TrackSelector::bass);
  EXPECT_TRUE(bass.notes.empty());
}

TEST(ExtractTrackTest, MergesAndSorts) {
  Song song;
  song.tracks[Role::piano] = NoteList{{{64, 1.0, 2.0}, {60, 2.0, 3.0}}, song.time_signature};
  song.tracks[Role::guitar] = NoteList{{{55, 0.5, 1.5}, {59, 1.0, 1.5}}, song.time_signature};
  NoteList all = extract_track(song, TrackSelector::all);
  ASSERT_EQ(all.notes.size(), 4u);
  // Oracle: sort of the concatenation.
  std::vector<Note> expected = {{55, 0.5, 1.5}, {59, 1.0, 1.5}, {64, 1.0, 2.0}, {60, 2.0, 3.0}};
  std::stable_sort(expected.begin(), expected.end(), note_order);
  EXPECT_EQ(all.notes, expected);
}

TEST(ExtractTrackTest, AllCountEqualsSumOfNonDrumTracks) {
  Rng rng(3);
  Song song;
  size_t non_drum = 0;
  for (Role role : {Role::bass, Role::piano, Role::guitar, Role::strings, Role::drums}) {
    NoteList track;
    size_t n = rng.uniform_int(20);
    for (size_t i = 0; i < n; ++i)
      track.notes.push_back({static_cast<int>(30 + rng.uniform_int(60)),
                             static_cast<double>(i), static_cast<double>(i) + 1.0});
    if (role != Role::drums) non_drum += n;
    song.tracks[role] = std::move(track);
  }
  EXPECT_EQ(extract_track(song, TrackSelector::all).notes.size(), non_drum);
}

}  // namespace
}  // namespace stylox
