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

#include "score/score.hpp"

#include <cmath>
#include <numbers>

#include "common/error.hpp"

namespace npat::score {

Phoneme Phoneme::from_id(int id) {
  if (id < 0 || id > kSilenceId) {
    throw InvalidArgument("phoneme id " + std::to_string(id) + " outside inventory [0, " +
                          std::to_string(kSilenceId) + "]");
  }
  return {id, id < kVowelCount};
}

Score make_score(double tempo_bpm, double frame_shift_ms, const std::vector<NoteSpec>& notes) {
  if (!(tempo_bpm > 0.0) || !(frame_shift_ms > 0.0)) {
    throw InvalidArgument("tempo and frame shift must be positive");
  }
  Score score;
  score.tempo_bpm = tempo_bpm;
  score.frame_shift_ms = frame_shift_ms;
  const double fpb = score.frames_per_beat();
  int frame = 0;
  double beat = 0.0;
  for (const NoteSpec& spec : notes) {
    Note note;
    note.midi = spec.midi;
    note.beats = spec.beats;
    note.start_beat = beat;
    note.start_frame = frame;
    note.end_frame = frame + static_cast<int>(std::lround(spec.beats * fpb));
    note.morae = spec.morae;
    frame = note.end_frame;
    beat += spec.beats;
    score.notes.push_back(std::move(note));
  }
  validate(score);
  return score;
}

void validate(const Score& score) {
  if (score.notes.empty()) throw InvalidArgument("score has no notes");
  if (!(score.tempo_bpm > 0.0) || !(score.frame_shift_ms > 0.0)) {
    throw InvalidArgument("tempo and frame shift must be positive");
  }
  bool any_sung = false;
  int expected_start = 0;
  for (std::size_t k = 0; k < score.notes.size(); ++k) {
    const Note& note = score.notes[k];
    const std::string where = "note " + std::to_string(k);
    if (note.start_frame != expected_start) throw InvalidArgument(where + " does not tile the song");
    if (note.end_frame <= note.start_frame) throw InvalidArgument(where + " has no frames");
    if (!(note.beats > 0.0)) throw InvalidArgument(where + " has non-positive length");
    expected_start = note.end_frame;
    if (note.is_rest()) {
      if (!note.morae.empty()) throw InvalidArgument(where + " is a rest with morae");
      continue;
    }
    any_sung = true;
    if (*note.midi < kMinMidi || *note.midi > kMaxMidi) {
      throw InvalidArgument(where + " pitch " + std::to_string(*note.midi) + " outside MIDI [" +
                            std::to_string(kMinMidi) + ", " + std::to_string(kMaxMidi) + "]");
    }
    if (note.morae.empty()) throw InvalidArgument(where + " has no morae");
    for (const Mora& mora : note.morae) {
      const auto& ph = mora.phonemes;
      if (ph.empty() || ph.size() > 2) throw InvalidArgument(where + ": mora must have 1-2 phonemes");
      for (const Phoneme& p : ph) {
        if (p.id < 0 || p.id >= kPhonemeCount || p.is_vowel != (p.id < kVowelCount)) {
          throw InvalidArgument(where + ": invalid phoneme id " + std::to_string(p.id));
        }
      }
      if (!ph.back().is_vowel) throw InvalidArgument(where + ": mora must end in a vowel");
      if (ph.size() == 2 && ph.front().is_vowel) {
        throw InvalidArgument(where + ": two-phoneme mora must be consonant + vowel");
      }
    }
  }
  if (!any_sung) throw InvalidArgument("score has only rests");
}

std::vector<PhonemeEntry> flatten(const Score& score) {
  if (score.notes.empty()) throw InvalidArgument("cannot flatten an empty score");
  std::vector<PhonemeEntry> entries;
  int mora_global = 0;
  for (std::size_t k = 0; k < score.notes.size(); ++k) {
    const Note& note = score.notes[k];
    if (note.is_rest()) {
      entries.push_back({Phoneme::silence(), static_cast<int>(k), mora_global++, 0, 0});
      continue;
    }
    for (std::size_t j = 0; j < note.morae.size(); ++j) {
      const auto& ph = note.morae[j].phonemes;
      for (std::size_t i = 0; i < ph.size(); ++i) {
        entries.push_back({ph[i], static_cast<int>(k), mora_global, static_cast<int>(j),
                           static_cast<int>(i)});
      }
      ++mora_global;
    }
  }
  return entries;
}

NotePositionTriple note_position_triple(int start, int end, int t) {
  NotePositionTriple out;
  out.p1 = t - start;
  out.p2 = end - t;
  if (t < start) {
    out.p3 = start - t;
  } else if (t > end) {
    out.p3 = t - end;
  }
  return out;
}

NotePositionTriple note_position_triple(const Score& score, std::span<const PhonemeEntry> entries,
                                        int t, std::size_t n) {
  if (n >= entries.size()) {
    throw InvalidArgument("phoneme index " + std::to_string(n) + " out of range [0, " +
                          std::to_string(entries.size()) + ")");
  }
  if (t < 0) throw InvalidArgument("frame position must be non-negative");
  const Note& note = score.notes[static_cast<std::size_t>(entries[n].note_index)];
  return note_position_triple(note.start_frame, note.end_frame, t);
}

NotePositionTriple note_position_triple(const Score& score, int t, std::size_t n) {
  const auto entries = flatten(score);
  return note_position_triple(score, entries, t, n);
}

NotePositionTriple normalized(const NotePositionTriple& triple, double frames_per_beat) {
  return {triple.p1 / frames_per_beat, triple.p2 / frames_per_beat, triple.p3 / frames_per_beat};
}

Matrix note_position_matrix(const Score& score, std::span<const PhonemeEntry> entries, int t) {
  Matrix m(entries.size(), 3);
  const double fpb = score.frames_per_beat();
  for (std::size_t n = 0; n < entries.size(); ++n) {
    const Note& note = score.notes[static_cast<std::size_t>(entries[n].note_index)];
    const NotePositionTriple p = normalized(note_position_triple(note.start_frame, note.end_frame, t), fpb);
    m(n, 0) = p.p1;
    m(n, 1) = p.p2;
    m(n, 2) = p.p3;
  }
  return m;
}

double normalized_pitch(const Note& note) {
  return note.is_rest() ? 0.0 : (*note.midi - 60) / 24.0;
}

Matrix phoneme_features(const Score& score) {
  validate(score);
  const auto entries = flatten(score);
  Matrix f(entries.size(), kPhonemeFeatureDim);
  constexpr std::size_t base = kPhonemeCount + 1;
  for (std::size_t n = 0; n < entries.size(); ++n) {
    const PhonemeEntry& e = entries[n];
    const Note& note = score.notes[static_cast<std::size_t>(e.note_index)];
    f(n, static_cast<std::size_t>(e.phoneme.id)) = 1.0;
    f(n, base + 0) = e.phoneme.is_vowel ? 1.0 : 0.0;
    f(n, base + 1) = normalized_pitch(note);
    f(n, base + 2) = note.beats;
    f(n, base + 3) = static_cast<double>(note.morae.size());
    f(n, base + 4) = e.position_in_mora;
    f(n, base + 5) = e.mora_index_in_note;
  }
  return f;
}

Matrix auxiliary_note_frames(const Score& score) {
  validate(score);
  const double fpb = score.frames_per_beat();
  Matrix aux(static_cast<std::size_t>(score.total_frames()), kAuxFeatureDim);
  for (const Note& note : score.notes) {
    const double bar_pos = std::fmod(note.start_beat, kBeatsPerBar) / kBeatsPerBar;
    const double len = note.frames();
    for (int t = note.start_frame; t < note.end_frame; ++t) {
      auto row = aux.row(static_cast<std::size_t>(t));
      row[0] = normalized_pitch(note);
      row[1] = note.beats;
      row[2] = bar_pos;
      row[3] = static_cast<double>(note.morae.size());
      row[4] = (t - note.start_frame) / len;
      row[5] = len / fpb;
    }
  }
  return aux;
}

std::vector<MoraSpan> mora_boundaries(const Score& score) {
  validate(score);
  std::vector<MoraSpan> spans;
  std::size_t entry = 0;
  for (std::size_t k = 0; k < score.notes.size(); ++k) {
    const Note& note = score.notes[k];
    const int s = note.start_frame;
    const long long len = note.frames();
    if (note.is_rest()) {
      spans.push_back({note.start_frame, note.end_frame, entry, entry + 1, static_cast<int>(k)});
      ++entry;
      continue;
    }
    const long long m = static_cast<long long>(note.morae.size());
    for (long long j = 0; j < m; ++j) {
      // round(j * len / m), halves rounded up, in exact integer arithmetic.
      const int b0 = s + static_cast<int>((2 * j * len + m) / (2 * m));
      const int b1 = s + static_cast<int>((2 * (j + 1) * len + m) / (2 * m));
      const std::size_t count = note.morae[static_cast<std::size_t>(j)].phonemes.size();
      spans.push_back({b0, b1, entry, entry + count, static_cast<int>(k)});
      entry += count;
    }
  }
  return spans;
}

double midi_to_log_f0(int midi) {
  return std::log(440.0) + ((midi - 69) / 12.0) * std::numbers::ln2;
}

std::vector<double> note_pitch_vector(const Score& score) {
  validate(score);
  std::optional<double> first_sung;
  for (const Note& note : score.notes) {
    if (!note.is_rest()) {
      first_sung = midi_to_log_f0(*note.midi);
      break;
    }
  }
  if (!first_sung) throw InvalidArgument("score has only rests");
  const auto entries = flatten(score);
  std::vector<double> out(entries.size());
  double held = *first_sung;
  for (std::size_t n = 0; n < entries.size(); ++n) {
    const Note& note = score.notes[static_cast<std::size_t>(entries[n].note_index)];
    if (!note.is_rest()) held = midi_to_log_f0(*note.midi);
    out[n] = held;
  }
  return out;
}

}  // namespace npat::score
