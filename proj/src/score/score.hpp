/*
 * Copyright (c) 2026, The npat Authors. All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common/matrix.hpp"

namespace npat::score {

// Closed phoneme inventory: ids [0, kVowelCount) are vowels, the rest of
// [0, kPhonemeCount) consonants. kSilenceId is reserved for rests.
inline constexpr int kPhonemeCount = 15;
inline constexpr int kVowelCount = 5;
inline constexpr int kFirstVoicedConsonant = 10;
inline constexpr int kSilenceId = kPhonemeCount;

inline constexpr int kMinMidi = 36;
inline constexpr int kMaxMidi = 84;
inline constexpr double kBeatsPerBar = 4.0;

inline constexpr std::size_t kPhonemeFeatureDim = kPhonemeCount + 7;
inline constexpr std::size_t kAuxFeatureDim = 6;

struct Phoneme {
  int id = 0;
  bool is_vowel = false;

  static Phoneme from_id(int id);
  static Phoneme silence() { return {kSilenceId, false}; }
  bool is_silence() const { return id == kSilenceId; }
  bool is_voiced() const { return is_vowel || (id >= kFirstVoicedConsonant && id < kPhonemeCount); }
  bool operator==(const Phoneme&) const = default;
};

struct Mora {
  std::vector<Phoneme> phonemes;
  bool operator==(const Mora&) const = default;
};

struct Note {
  std::optional<int> midi;  // nullopt for a rest
  double beats = 0.0;
  double start_beat = 0.0;
  int start_frame = 0;
  int end_frame = 0;
  std::vector<Mora> morae;

  bool is_rest() const { return !midi.has_value(); }
  int frames() const { return end_frame - start_frame; }
  bool operator==(const Note&) const = default;
};

struct Score {
  std::vector<Note> notes;
  double tempo_bpm = 120.0;
  double frame_shift_ms = 5.0;

  int total_frames() const { return notes.empty() ? 0 : notes.back().end_frame; }
  double frames_per_beat() const { return 60000.0 / (tempo_bpm * frame_shift_ms); }
  bool operator==(const Score&) const = default;
};

// One note as written in a score file, before the frame clock is applied.
struct NoteSpec {
  std::optional<int> midi;
  double beats = 1.0;
  std::vector<Mora> morae;
};

// Lays notes end to end; each note spans round(beats * frames_per_beat) frames.
// Throws InvalidArgument if the result violates a Score invariant.
Score make_score(double tempo_bpm, double frame_shift_ms, const std::vector<NoteSpec>& notes);

void validate(const Score& score);

struct PhonemeEntry {
  Phoneme phoneme;
  int note_index = 0;
  int mora_index_global = 0;
  int mora_index_in_note = 0;
  int position_in_mora = 0;
  bool operator==(const PhonemeEntry&) const = default;
};

// Encoder axis: phonemes in temporal order; a rest contributes one silence
// entry and counts as one pseudo-mora.
std::vector<PhonemeEntry> flatten(const Score& score);

struct NotePositionTriple {
  double p1 = 0.0;  // t - s
  double p2 = 0.0;  // e - t
  double p3 = 0.0;  // distance outside [s, e], 0 inside
  bool operator==(const NotePositionTriple&) const = default;
};

NotePositionTriple note_position_triple(int start, int end, int t);
// Raw frame differences for phoneme n (0-based) at frame t.
NotePositionTriple note_position_triple(const Score& score, std::span<const PhonemeEntry> entries,
                                        int t, std::size_t n);
NotePositionTriple note_position_triple(const Score& score, int t, std::size_t n);
NotePositionTriple normalized(const NotePositionTriple& triple, double frames_per_beat);
// N x 3 normalized triples for every phoneme at frame t.
Matrix note_position_matrix(const Score& score, std::span<const PhonemeEntry> entries, int t);

double normalized_pitch(const Note& note);

// N x kPhonemeFeatureDim.
Matrix phoneme_features(const Score& score);
// T x kAuxFeatureDim.
Matrix auxiliary_note_frames(const Score& score);

struct MoraSpan {
  int start_frame = 0;
  int end_frame = 0;
  std::size_t first_entry = 0;
  std::size_t end_entry = 0;
  int note_index = 0;
  bool operator==(const MoraSpan&) const = default;
};

// Pseudo mora boundaries from equal division of each note; rests are one span.
std::vector<MoraSpan> mora_boundaries(const Score& score);

double midi_to_log_f0(int midi);
// Log F0 of the owning note per phoneme; rests hold the previous sung pitch
// (leading rests take the first sung pitch).
std::vector<double> note_pitch_vector(const Score& score);

// Text score format; see README for the grammar.
Score parse_score(std::istream& in);
Score parse_score_text(const std::string& text);
Score load_score(const std::string& path);
std::string format_score(const Score& score);
void save_score(const Score& score, const std::string& path);

}  // namespace npat::score
