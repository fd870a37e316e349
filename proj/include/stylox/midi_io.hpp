// Standard MIDI File reading/writing against the beat-based note model.
//
// Reading accepts SMF type 0/1 at any resolution and converts ticks to
// fractional beats (quarter notes in 4/4, dotted quarters in 12/8). Writing
// always emits type 1 at 480 ticks per quarter, fixed tempo 120 BPM,
// constant velocity 100. Channel 10 is reserved for drums.

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

inline void validate_song(const Song& song) {
  for (const auto& [role, track] : song.tracks) {
    if (track.time_signature != song.time_signature)
      throw std::invalid_argument("track time signature differs from song");
    validate(track);
  }
}

constexpr int kWriteTicksPerQuarter = 480;

/// SMF format error with the byte offset where parsing failed.
class MidiError : public std::runtime_error {
 public:
  MidiError(const std::string& msg, size_t offset)
      : std::runtime_error(msg + " at offset " + std::to_string(offset)), offset_(offset) {}
  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

namespace midi_detail {

struct Reader {
  const std::vector<uint8_t>& bytes;
  size_t pos = 0;

  uint8_t u8() {
    if (pos >= bytes.size()) throw MidiError("unexpected end of file", pos);
    return bytes[pos++];
  }
  uint16_t u16() { return static_cast<uint16_t>(u8() << 8 | u8()); }
  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | u8();
    return v;
  }
  uint32_t varint() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      uint8_t b = u8();
      v = v << 7 | (b & 0x7f);
      if (!(b & 0x80)) return v;
    }
    throw MidiError("variable-length quantity too long", pos);
  }
  void expect_chunk(const char* id) {
    size_t at = pos;
    for (int i = 0; i < 4; ++i) {
      if (u8() != static_cast<uint8_t>(id[i]))
        throw MidiError(std::string("bad chunk id, expected '") + id + "'", at);
    }
  }
};

inline Role role_for_program(int program) {
  if ((program >= 0 && program <= 7) || (program >= 16 && program <= 23)) return Role::piano;
  if (program >= 24 && program <= 31) return Role::guitar;
  if (program >= 32 && program <= 39) return Role::bass;
  if (program >= 40 && program <= 55) return Role::strings;
  return Role::other;
}

inline int program_for_role(Role r) {
  switch (r) {
    case Role::bass: return 32;
    case Role::piano: return 0;
    case Role::guitar: return 24;
    case Role::strings: return 48;
    case Role::other: return 56;
    case Role::drums: return 0;
  }
  return 0;
}

struct VarintWriter {
  static void put(std::vector<uint8_t>& out, uint32_t v) {
    uint8_t buf[4];
    int n = 0;
    buf[n++] = v & 0x7f;
    while (v >>= 7) buf[n++] = (v & 0x7f) | 0x80;
    while (n--) out.push_back(buf[n]);
  }
};

}  // namespace midi_detail

/// Parse an SMF byte stream into a Song. Tracks are mapped to roles via
/// channel 10 (drums) and the General MIDI program family of each channel.
/// Recoverable oddities (dangling note-ons, zero-length notes) are fixed up
/// and reported through `warnings` when provided.
inline Song read_midi(const std::vector<uint8_t>& bytes,
                      std::vector<std::string>* warnings = nullptr) {
  using namespace midi_detail;
  Reader r{bytes};

  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };

  r.expect_chunk("MThd");
  size_t header_len_at = r.pos;
  uint32_t header_len = r.u32();
  if (header_len < 6) throw MidiError("header chunk too short", header_len_at);
  uint16_t format = r.u16();
  uint16_t ntrks = r.u16();
  uint16_t division = r.u16();
  for (uint32_t i = 6; i < header_len; ++i) r.u8();
  if (format > 1) throw MidiError("unsupported SMF format " + std::to_string(format), header_len_at + 4);
  if (division & 0x8000) throw MidiError("SMPTE time division unsupported", header_len_at + 8);
  if (division == 0) throw MidiError("zero ticks per quarter", header_len_at + 8);

  // One pending time signature for the whole file.
  int ts_num = -1, ts_den = -1;

  struct RawNote {
    int pitch;
    int64_t on_tick, off_tick;
    Role role;
  };
  std::vector<RawNote> raw;

  for (uint16_t t = 0; t < ntrks; ++t) {
    r.expect_chunk("MTrk");
    uint32_t len = r.u32();
    size_t track_end = r.pos + len;
    if (track_end > bytes.size()) throw MidiError("track length past end of file", r.pos - 4);

    int64_t tick = 0;
    uint8_t running = 0;
    int program[16] = {0};
    // FIFO queues of open note-ons per (channel, pitch).
    std::map<std::pair<int, int>, std::deque<std::pair<int64_t, Role>>> open;

    while (r.pos < track_end) {
      tick += r.varint();
      uint8_t status = bytes[r.pos];
      if (status & 0x80) {
        r.u8();
        if (status < 0xf0) running = status;
      } else {
        if (!(running & 0x80)) throw MidiError("data byte without running status", r.pos);
        status = running;
      }

      if (status == 0xff) {
        uint8_t type = r.u8();
        uint32_t mlen = r.varint();
        size_t data_at = r.pos;
        if (type == 0x58 && mlen >= 2) {
          int num = r.u8();
          int den_pow = r.u8();
          for (uint32_t i = 2; i < mlen; ++i) r.u8();
          bool ok44 = (num == 4 && den_pow == 2);
          bool ok128 = (num == 12 && den_pow == 3);
          if (!ok44 && !ok128)
            throw MidiError("unsupported time signature " + std::to_string(num) + "/" +
                                std::to_string(1 << den_pow),
                            data_at);
          if (ts_num != -1 && (ts_num != num || ts_den != den_pow))
            throw MidiError("multiple time signatures unsupported", data_at);
          ts_num = num;
          ts_den = den_pow;
        } else {
          for (uint32_t i = 0; i < mlen; ++i) r.u8();
        }
        continue;
      }
      if (status == 0xf0 || status == 0xf7) {
        uint32_t slen = r.varint();
        for (uint32_t i = 0; i < slen; ++i) r.u8();
        continue;
      }

      int channel = status & 0x0f;
      uint8_t kind = status & 0xf0;
      if (kind == 0x90 || kind == 0x80) {
        int pitch = r.u8() & 0x7f;
        int vel = r.u8() & 0x7f;
        if (kind == 0x90 && vel > 0) {
          Role role = channel == 9 ? Role::drums : role_for_program(program[channel]);
          open[{channel, pitch}].push_back({tick, role});
        } else {  // note-off, or note-on with velocity 0
          auto it = open.find({channel, pitch});
          if (it == open.end() || it->second.empty()) {
            warn("note-off without matching note-on (pitch " + std::to_string(pitch) + ")");
          } else {
            auto [on_tick, role] = it->second.front();
            it->second.pop_front();
            raw.push_back({pitch, on_tick, tick, role});
          }
        }
      } else if (kind == 0xc0) {
        program[channel] = r.u8() & 0x7f;
      } else if (kind == 0xd0) {
        r.u8();
      } else if (kind == 0xa0 || kind == 0xb0 || kind == 0xe0) {
        r.u8();
        r.u8();
      } else {
        throw MidiError("unexpected status byte", r.pos - 1);
      }
    }

    for (auto& [key, queue] : open) {
      for (auto& [on_tick, role] : queue) {
        warn("dangling note-on (pitch " + std::to_string(key.second) +
             ") closed at end of track");
        raw.push_back({key.second, on_tick, tick, role});
      }
    }
  }

  Song song;
  song.time_signature =
      (ts_num == 12 && ts_den == 3) ? TimeSignature::twelve_eight : TimeSignature::four_four;
  double ticks_per_beat =
      song.time_signature == TimeSignature::twelve_eight ? division * 1.5 : division;

  for (const RawNote& n : raw) {
    int64_t off = n.off_tick;
    if (off <= n.on_tick) off = n.on_tick + 1;
    Note note{n.pitch, n.on_tick / ticks_per_beat, off / ticks_per_beat};
    song.track(n.role).notes.push_back(note);
  }
  for (auto& [role, track] : song.tracks) {
    track.time_signature = song.time_signature;
    track.sort();
  }
  return song;
}

/// Serialize a Song as SMF type 1 (conductor track + one track per role).
inline std::vector<uint8_t> write_midi(const Song& song) {
  using namespace midi_detail;
  validate_song(song);

  double ticks_per_beat = song.time_signature == TimeSignature::twelve_eight
                              ? kWriteTicksPerQuarter * 1.5
                              : kWriteTicksPerQuarter;

  std::vector<std::vector<uint8_t>> track_chunks;

  // Conductor track: time signature + tempo 120 BPM.
  {
    std::vector<uint8_t> t;
    VarintWriter::put(t, 0);
    if (song.time_signature == TimeSignature::twelve_eight) {
      t.insert(t.end(), {0xff, 0x58, 0x04, 12, 3, 36, 8});
    } else {
      t.insert(t.end(), {0xff, 0x58, 0x04, 4, 2, 24, 8});
    }
    VarintWriter::put(t, 0);
    t.insert(t.end(), {0xff, 0x51, 0x03, 0x07, 0xa1, 0x20});  // 500000 us per quarter
    VarintWriter::put(t, 0);
    t.insert(t.end(), {0xff, 0x2f, 0x00});
    track_chunks.push_back(std::move(t));
  }

  int next_channel = 0;
  for (Role role : all_roles()) {
    auto it = song.tracks.find(role);
    if (it == song.tracks.end()) continue;
    const NoteList& track = it->second;

    int channel;
    if (role == Role::drums) {
      channel = 9;
    } else {
      if (next_channel == 9) ++next_channel;
      channel = next_channel++ & 0x0f;
    }

    struct Ev {
      int64_t tick;
      bool is_on;
      int pitch;
    };
    std::vector<Ev> evs;
    for (const Note& n : track.notes) {
      int64_t on = static_cast<int64_t>(std::llround(n.onset * ticks_per_beat));
      int64_t off = static_cast<int64_t>(std::llround(n.offset * ticks_per_beat));
      if (off <= on) off = on + 1;
      evs.push_back({on, true, n.pitch});
      evs.push_back({off, false, n.pitch});
    }
    std::stable_sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) {
      if (a.tick != b.tick) return a.tick < b.tick;
      if (a.is_on != b.is_on) return !a.is_on;  // offs before ons
      return a.pitch < b.pitch;
    });

    std::vector<uint8_t> t;
    VarintWriter::put(t, 0);
    t.push_back(0xc0 | channel);
    t.push_back(static_cast<uint8_t>(program_for_role(role)));
    int64_t prev = 0;
    for (const Ev& e : evs) {
      VarintWriter::put(t, static_cast<uint32_t>(e.tick - prev));
      prev = e.tick;
      if (e.is_on) {
        t.push_back(0x90 | channel);
        t.push_back(static_cast<uint8_t>(e.pitch));
        t.push_back(100);
      } else {
        t.push_back(0x80 | channel);
        t.push_back(static_cast<uint8_t>(e.pitch));
        t.push_back(0);
      }
    }
    VarintWriter::put(t, 0);
    t.insert(t.end(), {0xff, 0x2f, 0x00});
    track_chunks.push_back(std::move(t));
  }

  std::vector<uint8_t> out;
  auto u16 = [&](uint16_t v) {
    out.push_back(v >> 8);
    out.push_back(v & 0xff);
  };
  auto u32 = [&](uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back((v >> (8 * i)) & 0xff);
  };
  out.insert(out.end(), {'M', 'T', 'h', 'd'});
  u32(6);
  u16(1);
  u16(static_cast<uint16_t>(track_chunks.size()));
  u16(kWriteTicksPerQuarter);
  for (const auto& chunk : track_chunks) {
    out.insert(out.end(), {'M', 'T', 'r', 'k'});
    u32(static_cast<uint32_t>(chunk.size()));
    out.insert(out.end(), chunk.begin(), chunk.end());
  }
  return out;
}

/// Pick a single track out of a Song: a named role, or every non-drum track
/// merged and re-sorted. Missing roles yield an empty (silent) NoteList.
inline NoteList extract_track(const Song& song, TrackSelector selector) {
  NoteList out;
  out.time_signature = song.time_signature;
  auto append = [&](Role r) {
    auto it = song.tracks.find(r);
    if (it == song.tracks.end()) return;
    out.notes.insert(out.notes.end(), it->second.notes.begin(), it->second.notes.end());
  };
  switch (selector) {
    case TrackSelector::bass: append(Role::bass); break;
    case TrackSelector::piano: append(Role::piano); break;
    case TrackSelector::all:
      for (Role r : all_roles())
        if (r != Role::drums) append(r);
      break;
  }
  out.sort();
  return out;
}

}  // namespace stylox
