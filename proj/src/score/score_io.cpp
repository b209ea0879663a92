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

#include <fstream>
#include <sstream>

#include "common/error.hpp"
#include "common/format.hpp"
#include "score/score.hpp"

namespace npat::score {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(text);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<Mora> parse_morae(const std::string& field) {
  std::vector<Mora> morae;
  for (const std::string& chunk : split(field, ';')) {
    Mora mora;
    for (const std::string& id_text : split(chunk, '/')) {
      const long long id = parse_int(id_text, "phoneme id");
      if (id < 0 || id >= kPhonemeCount) {
        throw ParseError("phoneme id " + id_text + " outside [0, " + std::to_string(kPhonemeCount) + ")");
      }
      mora.phonemes.push_back(Phoneme::from_id(static_cast<int>(id)));
    }
    const auto& ph = mora.phonemes;
    if (ph.empty() || ph.size() > 2) throw ParseError("mora '" + chunk + "' must have 1-2 phonemes");
    if (!ph.back().is_vowel) throw ParseError("mora '" + chunk + "' must end in a vowel");
    if (ph.size() == 2 && ph.front().is_vowel) {
      throw ParseError("mora '" + chunk + "' must be consonant + vowel");
    }
    morae.push_back(std::move(mora));
  }
  return morae;
}

}  // namespace

Score parse_score(std::istream& in) {
  std::string line;
  int line_no = 0;
  bool have_header = false;
  double tempo = 0.0;
  double shift = 5.0;
  std::vector<NoteSpec> notes;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    std::istringstream tokens(text);
    std::vector<std::string> tok;
    for (std::string t; tokens >> t;) tok.push_back(t);
    try {
      if (!have_header) {
        bool saw_tempo = false;
        for (const std::string& t : tok) {
          const auto eq = t.find('=');
          if (eq == std::string::npos) throw ParseError("expected key=value in header, got '" + t + "'");
          const std::string key = t.substr(0, eq);
          const std::string val = t.substr(eq + 1);
          if (key == "tempo") {
            tempo = parse_double(val, "tempo");
            saw_tempo = true;
          } else if (key == "frame_shift_ms") {
            shift = parse_double(val, "frame_shift_ms");
          } else {
            throw ParseError("unknown header key '" + key + "'");
          }
        }
        if (!saw_tempo) throw ParseError("header must start with tempo=<bpm>");
        if (!(tempo > 0.0) || !(shift > 0.0)) throw ParseError("tempo and frame_shift_ms must be positive");
        have_header = true;
        continue;
      }
      if (tok[0] != "note") throw ParseError("expected 'note', got '" + tok[0] + "'");
      if (tok.size() < 3 || tok.size() > 4) {
        throw ParseError("expected 'note <midi|R> <beats> <morae>'");
      }
      NoteSpec spec;
      spec.beats = parse_double(tok[2], "beats");
      if (!(spec.beats > 0.0)) throw ParseError("beats must be positive");
      if (tok[1] == "R") {
        if (tok.size() == 4 && tok[3] != "-") throw ParseError("a rest takes no morae");
      } else {
        const long long midi = parse_int(tok[1], "pitch");
        if (midi < kMinMidi || midi > kMaxMidi) {
          throw ParseError("pitch " + tok[1] + " outside MIDI [" + std::to_string(kMinMidi) + ", " +
                           std::to_string(kMaxMidi) + "]");
        }
        spec.midi = static_cast<int>(midi);
        if (tok.size() != 4) throw ParseError("a sung note needs morae");
        spec.morae = parse_morae(tok[3]);
      }
      notes.push_back(std::move(spec));
    } catch (const Error& e) {
      throw ParseError(where + e.what());
    }
  }
  if (!have_header) throw ParseError("missing header line 'tempo=<bpm> frame_shift_ms=<ms>'");
  try {
    return make_score(tempo, shift, notes);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
}

Score parse_score_text(const std::string& text) {
  std::istringstream in(text);
  return parse_score(in);
}

Score load_score(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open score file '" + path + "'");
  try {
    return parse_score(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string format_score(const Score& score) {
  std::ostringstream os;
  os << "tempo=" << format_double(score.tempo_bpm)
     << " frame_shift_ms=" << format_double(score.frame_shift_ms) << '\n';
  for (const Note& note : score.notes) {
    os << "note " << (note.is_rest() ? std::string("R") : std::to_string(*note.midi)) << ' '
       << format_double(note.beats);
    if (!note.is_rest()) {
      os << ' ';
      for (std::size_t j = 0; j < note.morae.size(); ++j) {
        if (j) os << ';';
        const auto& ph = note.morae[j].phonemes;
        for (std::size_t i = 0; i < ph.size(); ++i) {
          if (i) os << '/';
          os << ph[i].id;
        }
      }
    }
    os << '\n';
  }
  return os.str();
}

void save_score(const Score& score, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write score file '" + path + "'");
  out << format_score(score);
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace npat::score
