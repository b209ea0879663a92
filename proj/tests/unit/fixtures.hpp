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

#include <initializer_list>
#include <optional>
#include <random>

#include "score/score.hpp"

namespace npat::testing {

inline score::Mora mora(std::initializer_list<int> ids) {
  score::Mora m;
  for (int id : ids) m.phonemes.push_back(score::Phoneme::from_id(id));
  return m;
}

inline score::Score random_score(std::mt19937_64& rng, int max_notes = 8) {
  std::uniform_int_distribution<int> n_notes(1, max_notes), midi(48, 76), consonant(5, 14), vowel(0, 4);
  std::uniform_int_distribution<int> beats_idx(0, 3), n_morae(1, 2), coin(0, 1);
  const double beats_choice[] = {0.5, 1.0, 1.5, 2.0};
  std::vector<score::NoteSpec> notes;
  const int count = n_notes(rng);
  for (int k = 0; k < count; ++k) {
    score::NoteSpec spec;
    spec.beats = beats_choice[beats_idx(rng)];
    if (k > 0 && coin(rng) && coin(rng)) {
      notes.push_back(spec);
      continue;
    }
    spec.midi = midi(rng);
    const int m = n_morae(rng);
    for (int j = 0; j < m; ++j) {
      spec.morae.push_back(coin(rng) ? mora({consonant(rng), vowel(rng)}) : mora({vowel(rng)}));
    }
    notes.push_back(spec);
  }
  std::uniform_real_distribution<double> tempo(100.0, 200.0);
  return score::make_score(tempo(rng), 5.0, notes);
}

}  // namespace npat::testing
