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

#include "synthdata/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "common/error.hpp"
#include "common/format.hpp"
#include "common/rng.hpp"

namespace npat::synth {

namespace {

constexpr double kBeatChoices[] = {0.5, 1.0, 1.5, 2.0};
constexpr int kMaxAttempts = 100;

double cents_to_log(double cents) { return cents * std::numbers::ln2 / 1200.0; }

score::Mora random_mora(const CorpusSpec& spec, std::mt19937_64& g) {
  score::Mora m;
  if (rng::uniform01(g) < spec.consonant_prob) {
    m.phonemes.push_back(score::Phoneme::from_id(static_cast<int>(
        rng::uniform_int(g, score::kVowelCount, score::kPhonemeCount - 1))));
  }
  m.phonemes.push_back(score::Phoneme::from_id(static_cast<int>(rng::uniform_int(g, 0, score::kVowelCount - 1))));
  return m;
}

score::Score random_score(const CorpusSpec& spec, std::mt19937_64& g) {
  std::vector<score::NoteSpec> notes;
  const double rest_beats[] = {0.5, 1.0};
  notes.push_back({std::nullopt, rest_beats[rng::uniform_int(g, 0, 1)], {}});
  const int count = static_cast<int>(rng::uniform_int(g, spec.min_notes, spec.max_notes));
  int midi = static_cast<int>(rng::uniform_int(g, spec.min_midi, spec.max_midi));
  for (int k = 0; k < count; ++k) {
    score::NoteSpec note;
    note.beats = kBeatChoices[rng::uniform_int(g, 0, 3)];
    if (k > 0) {
      midi += static_cast<int>(rng::uniform_int(g, -spec.max_pitch_step, spec.max_pitch_step));
      if (midi < spec.min_midi) midi = 2 * spec.min_midi - midi;
      if (midi > spec.max_midi) midi = 2 * spec.max_midi - midi;
      midi = std::clamp(midi, spec.min_midi, spec.max_midi);
    }
    note.midi = midi;
    const bool two = note.beats >= 1.0 && rng::uniform01(g) < spec.two_morae_prob;
    for (int j = 0; j < (two ? 2 : 1); ++j) note.morae.push_back(random_mora(spec, g));
    notes.push_back(std::move(note));
    if (k + 1 < count && rng::uniform01(g) < spec.rest_prob) notes.push_back({std::nullopt, 0.5, {}});
  }
  notes.push_back({std::nullopt, rest_beats[rng::uniform_int(g, 0, 1)], {}});
  const double tempo = rng::uniform(g, spec.min_tempo, spec.max_tempo);
  return score::make_score(tempo, spec.frame_shift_ms, notes);
}

}  // namespace

void validate(const CorpusSpec& s) {
  auto fail = [](const std::string& msg) { throw InvalidArgument("corpus spec: " + msg); };
  if (s.num_songs < 1) fail("num_songs must be >= 1");
  if (s.num_train < 0 || s.num_train > s.num_songs) fail("num_train must be in [0, num_songs]");
  if (s.min_notes < 1 || s.max_notes < s.min_notes) fail("note count range is empty");
  if (!(s.min_tempo > 0.0) || s.max_tempo < s.min_tempo) fail("tempo range is empty");
  if (s.min_midi < score::kMinMidi || s.max_midi > score::kMaxMidi || s.max_midi < s.min_midi) {
    fail("pitch range must lie within MIDI 36-84");
  }
  if (s.max_pitch_step < 0) fail("max_pitch_step must be >= 0");
  for (double p : {s.two_morae_prob, s.consonant_prob, s.rest_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) fail("probabilities must be in [0, 1]");
  }
  if (s.consonant_mean < 2.0) fail("consonant_mean must be >= 2");
  if (s.consonant_std < 0.0 || s.timing_shift_std < 0.0 || s.noise_std < 0.0) fail("std values must be >= 0");
  if (s.min_consonant < 1 || s.min_vowel < 1) fail("minimum phoneme lengths must be >= 1");
  if (s.max_timing_shift < 0) fail("max_timing_shift must be >= 0");
  if (!(s.frame_shift_ms > 0.0)) fail("frame_shift_ms must be positive");
  if (s.acoustic_dim < 3) fail("acoustic_dim must be >= 3");
}

std::vector<int> truth_alignment(const score::Score& score, const CorpusSpec& spec, std::uint64_t stream) {
  std::mt19937_64 g(stream);
  const auto entries = score::flatten(score);
  const auto spans = score::mora_boundaries(score);
  const int total = score.total_frames();

  std::vector<int> note_shift(score.notes.size());
  for (int& s : note_shift) {
    const double v = rng::normal(g, spec.timing_shift_mean, spec.timing_shift_std);
    s = static_cast<int>(std::lround(std::clamp(v, 0.0, static_cast<double>(spec.max_timing_shift))));
  }
  std::vector<int> onset(spans.size());
  for (std::size_t j = 0; j < spans.size(); ++j) {
    onset[j] = j == 0 ? 0 : spans[j].start_frame - note_shift[static_cast<std::size_t>(spans[j].note_index)];
  }

  std::vector<int> path(static_cast<std::size_t>(total), -1);
  for (std::size_t j = 0; j < spans.size(); ++j) {
    const int begin = onset[j];
    const int end = j + 1 < spans.size() ? onset[j + 1] : total;
    const int length = end - begin;
    const std::size_t first = spans[j].first_entry;
    const std::size_t count = spans[j].end_entry - first;
    int consonant = 0;
    if (count == 2) {
      const double c = rng::normal(g, spec.consonant_mean, spec.consonant_std);
      consonant = std::max(spec.min_consonant, static_cast<int>(std::lround(c)));
    }
    const bool rest = entries[first].phoneme.is_silence();
    if (length - consonant < (rest ? 1 : spec.min_vowel)) {
      throw InvalidArgument("mora " + std::to_string(j) + " has " + std::to_string(length) +
                            " frames, too short for its phonemes");
    }
    for (int f = begin; f < end; ++f) {
      path[static_cast<std::size_t>(f)] = static_cast<int>(f - begin < consonant ? first : first + count - 1);
    }
  }
  return path;
}

std::vector<double> timbre_prototype(std::uint64_t seed, int phoneme_id, std::size_t dims) {
  std::mt19937_64 g(rng::mix(seed, 0x70726f746fULL + static_cast<std::uint64_t>(phoneme_id)));
  std::vector<double> v(dims);
  for (double& x : v) x = rng::normal(g);
  return v;
}

Matrix oracle_features(const score::Score& score, const std::vector<int>& alignment, const CorpusSpec& spec,
                       std::uint64_t stream) {
  const auto entries = score::flatten(score);
  const std::size_t total = static_cast<std::size_t>(score.total_frames());
  if (alignment.size() != total) {
    throw DimensionError("alignment has " + std::to_string(alignment.size()) + " frames, score has " +
                         std::to_string(total));
  }
  const std::size_t d = spec.acoustic_dim;
  const std::size_t timbre = d - 2;
  std::mt19937_64 g(stream);
  std::vector<double> detune(score.notes.size());
  for (double& c : detune) c = rng::uniform(g, -spec.detune_cents, spec.detune_cents);
  std::vector<std::vector<double>> protos;
  for (int id = 0; id <= score::kSilenceId; ++id) protos.push_back(timbre_prototype(spec.seed, id, timbre));

  Matrix out(total, d);
  int vowel_onset = 0;
  for (std::size_t f = 0; f < total; ++f) {
    const int n = alignment[f];
    if (n < 0 || static_cast<std::size_t>(n) >= entries.size()) {
      throw InvalidArgument("alignment frame " + std::to_string(f) + " names phoneme " + std::to_string(n));
    }
    const score::PhonemeEntry& e = entries[static_cast<std::size_t>(n)];
    const auto& proto = protos[static_cast<std::size_t>(e.phoneme.id)];
    for (std::size_t k = 0; k < timbre; ++k) {
      out(f, k) = proto[k] + (spec.noise_std > 0.0 ? rng::normal(g, 0.0, spec.noise_std) : 0.0);
    }
    if (f == 0 || alignment[f - 1] != n) vowel_onset = static_cast<int>(f);
    double cents = 0.0;
    if (!e.phoneme.is_silence() && e.phoneme.is_voiced()) {
      cents = detune[static_cast<std::size_t>(e.note_index)];
      if (e.phoneme.is_vowel) {
        const double seconds = (static_cast<double>(f) - vowel_onset) * spec.frame_shift_ms / 1000.0;
        cents += spec.vibrato_cents * std::sin(2.0 * std::numbers::pi * spec.vibrato_hz * seconds);
      }
    }
    out(f, residual_channel(d)) = cents_to_log(cents);
    out(f, vuv_channel(d)) = e.phoneme.is_voiced() ? 1.0 : 0.0;
  }
  return out;
}

std::vector<double> truth_log_f0(const score::Score& score, const GroundTruth& truth) {
  const auto pitch = score::note_pitch_vector(score);
  const std::size_t d = truth.frames.cols;
  std::vector<double> out(truth.alignment.size());
  for (std::size_t f = 0; f < out.size(); ++f) {
    out[f] = pitch[static_cast<std::size_t>(truth.alignment[f])] + truth.frames(f, residual_channel(d));
  }
  return out;
}

Song generate_song(const CorpusSpec& spec, int index) {
  validate(spec);
  std::mt19937_64 g(rng::mix(spec.seed, static_cast<std::uint64_t>(index)));
  std::string last_error;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Song song;
    song.score = random_score(spec, g);
    const std::uint64_t align_stream = g();
    const std::uint64_t feature_stream = g();
    try {
      song.truth.alignment = truth_alignment(song.score, spec, align_stream);
    } catch (const InvalidArgument& e) {
      last_error = e.what();
      continue;
    }
    song.truth.frames = oracle_features(song.score, song.truth.alignment, spec, feature_stream);
    return song;
  }
  throw InvalidArgument("song " + std::to_string(index) + ": no feasible layout after " +
                        std::to_string(kMaxAttempts) + " tries (" + last_error + ")");
}

Corpus generate_corpus(const CorpusSpec& spec) {
  validate(spec);
  Corpus c;
  c.num_train = spec.num_train;
  c.acoustic_dim = spec.acoustic_dim;
  c.seed = spec.seed;
  for (int k = 0; k < spec.num_songs; ++k) c.songs.push_back(generate_song(spec, k));
  return c;
}

std::string format_features(const Matrix& frames) {
  std::string out = std::to_string(frames.rows) + " " + std::to_string(frames.cols) + "\n";
  for (std::size_t r = 0; r < frames.rows; ++r) {
    for (std::size_t c = 0; c < frames.cols; ++c) {
      if (c) out += ' ';
      out += format_double(frames(r, c));
    }
    out += '\n';
  }
  return out;
}

Matrix parse_features(const std::string& text) {
  std::istringstream in(text);
  std::string rows_tok, cols_tok;
  if (!(in >> rows_tok >> cols_tok)) throw ParseError("feature file: missing 'T D' header");
  const long long rows = parse_int(rows_tok, "feature frame count");
  const long long cols = parse_int(cols_tok, "feature dimension");
  if (rows < 1 || cols < 1) throw ParseError("feature file: T and D must be positive");
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  std::string tok;
  for (double& v : m.data) {
    if (!(in >> tok)) throw ParseError("feature file: expected " + std::to_string(rows * cols) + " values");
    v = parse_double(tok, "feature value");
  }
  if (in >> tok) throw ParseError("feature file: trailing data after " + std::to_string(rows) + " frames");
  return m;
}

std::string format_alignment(const std::vector<int>& alignment) {
  std::string out;
  for (int n : alignment) out += std::to_string(n + 1) + "\n";
  return out;
}

std::vector<int> parse_alignment(const std::string& text, std::size_t num_phonemes) {
  std::istringstream in(text);
  std::vector<int> out;
  std::string tok;
  while (in >> tok) {
    const long long v = parse_int(tok, "alignment index");
    if (v < 1 || static_cast<std::size_t>(v) > num_phonemes) {
      throw ParseError("alignment index " + tok + " outside [1, " + std::to_string(num_phonemes) + "]");
    }
    out.push_back(static_cast<int>(v - 1));
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string checksum_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::string song_stem(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "song_%04zu", k);
  return buf;
}

std::string manifest(const Corpus& c) {
  return "num_songs = " + std::to_string(c.songs.size()) + "\nnum_train = " + std::to_string(c.num_train) +
         "\nacoustic_dim = " + std::to_string(c.acoustic_dim) + "\nseed = " + std::to_string(c.seed) + "\n";
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  out << bytes;
  if (!out) throw IoError("write failed for '" + p.string() + "'");
}

}  // namespace

std::uint64_t corpus_checksum(const Corpus& corpus) {
  std::uint64_t h = fnv1a64(manifest(corpus));
  for (const Song& s : corpus.songs) {
    h = fnv1a64(score::format_score(s.score), h);
    h = fnv1a64(format_features(s.truth.frames), h);
    h = fnv1a64(format_alignment(s.truth.alignment), h);
  }
  return h;
}

std::uint64_t write_corpus(const Corpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create corpus directory '" + dir + "'");
  const fs::path root(dir);
  write_file(root / "corpus.txt", manifest(corpus));
  for (std::size_t k = 0; k < corpus.songs.size(); ++k) {
    const Song& s = corpus.songs[k];
    const std::string stem = song_stem(k);
    write_file(root / (stem + ".score"), score::format_score(s.score));
    write_file(root / (stem + ".feat"), format_features(s.truth.frames));
    write_file(root / (stem + ".align"), format_alignment(s.truth.alignment));
  }
  return corpus_checksum(corpus);
}

Corpus load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw IoError("corpus directory '" + dir + "' does not exist");
  Corpus c;
  std::size_t num_songs = 0;
  std::istringstream meta(read_file(root / "corpus.txt"));
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "num_songs") num_songs = static_cast<std::size_t>(parse_int(value, key));
    else if (key == "num_train") c.num_train = static_cast<int>(parse_int(value, key));
    else if (key == "acoustic_dim") c.acoustic_dim = static_cast<std::size_t>(parse_int(value, key));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(value, key));
  }
  if (num_songs == 0) throw ParseError(dir + "/corpus.txt: num_songs missing or zero");
  for (std::size_t k = 0; k < num_songs; ++k) {
    const std::string stem = song_stem(k);
    Song s;
    s.score = score::load_score((root / (stem + ".score")).string());
    const std::size_t n = score::flatten(s.score).size();
    try {
      s.truth.frames = parse_features(read_file(root / (stem + ".feat")));
      s.truth.alignment = parse_alignment(read_file(root / (stem + ".align")), n);
    } catch (const ParseError& e) {
      throw ParseError(stem + ": " + e.what());
    }
    const std::size_t total = static_cast<std::size_t>(s.score.total_frames());
    if (s.truth.frames.rows != total || s.truth.alignment.size() != total) {
      throw DimensionError(stem + ": score has " + std::to_string(total) + " frames, features " +
                           std::to_string(s.truth.frames.rows) + ", alignment " +
                           std::to_string(s.truth.alignment.size()));
    }
    if (s.truth.frames.cols != c.acoustic_dim) {
      throw DimensionError(stem + ": feature dimension " + std::to_string(s.truth.frames.cols) +
                           " does not match corpus dimension " + std::to_string(c.acoustic_dim));
    }
    c.songs.push_back(std::move(s));
  }
  return c;
}

}  // namespace npat::synth
