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

#include <cstdint>
#include <string>
#include <vector>

#include "common/matrix.hpp"
#include "score/score.hpp"

namespace npat::synth {

// Acoustic frame layout: timbre dims, then the log-F0 residual, then V/UV.
inline constexpr std::size_t kDefaultAcousticDim = 8;

struct CorpusSpec {
  int num_songs = 70;
  int num_train = 60;
  int min_notes = 6;  // sung notes, excluding the leading and trailing rest
  int max_notes = 10;
  double min_tempo = 150.0;
  double max_tempo = 200.0;
  int min_midi = 57;
  int max_midi = 72;
  int max_pitch_step = 2;
  double two_morae_prob = 0.4;  // only notes of at least one beat get two
  double consonant_prob = 0.6;
  double rest_prob = 0.1;  // interior rest after a sung note
  double consonant_mean = 9.0;
  double consonant_std = 2.0;
  int min_consonant = 4;
  int min_vowel = 6;
  double timing_shift_mean = 8.0;
  double timing_shift_std = 2.0;
  int max_timing_shift = 15;
  double noise_std = 0.05;
  double detune_cents = 30.0;
  double vibrato_cents = 20.0;
  double vibrato_hz = 5.0;
  double frame_shift_ms = 5.0;
  std::size_t acoustic_dim = kDefaultAcousticDim;
  std::uint64_t seed = 1;
  bool operator==(const CorpusSpec&) const = default;
};

void validate(const CorpusSpec& spec);

struct GroundTruth {
  std::vector<int> alignment;  // 0-based phoneme entry per frame
  Matrix frames;               // T x D
};

struct Song {
  score::Score score;
  GroundTruth truth;
};

struct Corpus {
  std::vector<Song> songs;
  int num_train = 0;
  std::size_t acoustic_dim = kDefaultAcousticDim;
  std::uint64_t seed = 0;
};

// Pure function of the spec; song k draws from its own derived seed.
Corpus generate_corpus(const CorpusSpec& spec);
Song generate_song(const CorpusSpec& spec, int index);

// Frame-level alignment with vocal onsets pulled ahead of the notes. Throws
// InvalidArgument when the score cannot host its morae.
std::vector<int> truth_alignment(const score::Score& score, const CorpusSpec& spec, std::uint64_t stream);

// Per-phoneme timbre prototype (id 0..kSilenceId), deterministic in (seed, id).
std::vector<double> timbre_prototype(std::uint64_t seed, int phoneme_id, std::size_t dims);

Matrix oracle_features(const score::Score& score, const std::vector<int>& alignment, const CorpusSpec& spec,
                       std::uint64_t stream);

// Absolute log F0 per frame implied by a frame matrix and its alignment.
std::vector<double> truth_log_f0(const score::Score& score, const GroundTruth& truth);

inline std::size_t residual_channel(std::size_t dim) { return dim - 2; }
inline std::size_t vuv_channel(std::size_t dim) { return dim - 1; }

std::string format_features(const Matrix& frames);
Matrix parse_features(const std::string& text);
std::string format_alignment(const std::vector<int>& alignment);  // 1-based, one per line
std::vector<int> parse_alignment(const std::string& text, std::size_t num_phonemes);

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t corpus_checksum(const Corpus& corpus);
std::string checksum_hex(std::uint64_t h);

// Writes song_%04d.{score,feat,align} and corpus.txt; returns the checksum.
std::uint64_t write_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

}  // namespace npat::synth
