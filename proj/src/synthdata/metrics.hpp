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

#include <vector>

#include "common/matrix.hpp"
#include "score/score.hpp"

namespace npat::synth {

// Per-frame argmax phoneme of an N x Tdec alignment, each column repeated r
// times and trimmed to `frames`.
std::vector<int> frame_path(const Matrix& alignment, int reduction, std::size_t frames);

// First frame whose phoneme belongs to each mora; -1 where the mora is never
// visited. Path entries of -1 are skipped.
std::vector<int> mora_onsets(const score::Score& score, const std::vector<int>& path);

struct TimingReport {
  double mae_frames = 0.0;
  std::size_t morae = 0;
  std::size_t missing = 0;  // morae the prediction never visited
  bool monotone = true;     // predicted phoneme path never moves backwards
};

// Onset MAE over morae. A mora the prediction skips takes the next visited
// onset (or T) and is counted in `missing`.
TimingReport timing_error(const std::vector<int>& predicted, const score::Score& score,
                          const std::vector<int>& truth);

// Fraction of adjacent columns whose argmax advances by 0 or 1.
double monotonicity_rate(const Matrix& alignment);

// RMSE in cents over frames where truth_vuv >= 0.5.
double f0_rmse_cents(const std::vector<double>& predicted_log_f0, const std::vector<double>& truth_log_f0,
                     const std::vector<double>& truth_vuv);

}  // namespace npat::synth
