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

#include "synthdata/metrics.hpp"

#include <cmath>
#include <numbers>

#include "common/error.hpp"

namespace npat::synth {

namespace {

std::size_t argmax_column(const Matrix& a, std::size_t t) {
  std::size_t best = 0;
  for (std::size_t n = 1; n < a.rows; ++n) {
    if (a(n, t) > a(best, t)) best = n;
  }
  return best;
}

}  // namespace

std::vector<int> frame_path(const Matrix& alignment, int reduction, std::size_t frames) {
  if (reduction < 1) throw InvalidArgument("reduction factor must be >= 1");
  if (alignment.cols * static_cast<std::size_t>(reduction) < frames) {
    throw DimensionError("alignment has " + std::to_string(alignment.cols) + " steps, too few for " +
                         std::to_string(frames) + " frames");
  }
  std::vector<int> path(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    path[f] = static_cast<int>(argmax_column(alignment, f / static_cast<std::size_t>(reduction)));
  }
  return path;
}

std::vector<int> mora_onsets(const score::Score& score, const std::vector<int>& path) {
  const auto spans = score::mora_boundaries(score);
  std::vector<int> entry_to_mora(spans.back().end_entry);
  for (std::size_t j = 0; j < spans.size(); ++j) {
    for (std::size_t e = spans[j].first_entry; e < spans[j].end_entry; ++e) entry_to_mora[e] = static_cast<int>(j);
  }
  std::vector<int> onsets(spans.size(), -1);
  for (std::size_t f = 0; f < path.size(); ++f) {
    const int n = path[f];
    if (n < 0) continue;
    if (static_cast<std::size_t>(n) >= entry_to_mora.size()) {
      throw InvalidArgument("path frame " + std::to_string(f) + " names phoneme " + std::to_string(n));
    }
    int& slot = onsets[static_cast<std::size_t>(entry_to_mora[static_cast<std::size_t>(n)])];
    if (slot < 0) slot = static_cast<int>(f);
  }
  return onsets;
}

TimingReport timing_error(const std::vector<int>& predicted, const score::Score& score,
                          const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) {
    throw DimensionError("timing_error: predicted path has " + std::to_string(predicted.size()) +
                         " frames, truth " + std::to_string(truth.size()));
  }
  const std::vector<int> pred = mora_onsets(score, predicted);
  const std::vector<int> ref = mora_onsets(score, truth);
  TimingReport r;
  int last = -1;
  for (int n : predicted) {
    if (n < 0) continue;
    if (last >= 0 && n < last) r.monotone = false;
    last = n;
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < ref.size(); ++j) {
    if (ref[j] < 0) continue;
    int onset = pred[j];
    if (onset < 0) {
      ++r.missing;
      onset = static_cast<int>(predicted.size());
      for (std::size_t k = j + 1; k < pred.size(); ++k) {
        if (pred[k] >= 0) {
          onset = pred[k];
          break;
        }
      }
    }
    sum += std::abs(onset - ref[j]);
    ++r.morae;
  }
  r.mae_frames = r.morae ? sum / static_cast<double>(r.morae) : 0.0;
  return r;
}

double monotonicity_rate(const Matrix& alignment) {
  if (alignment.cols < 2) return 1.0;
  std::size_t good = 0;
  std::size_t prev = argmax_column(alignment, 0);
  for (std::size_t t = 1; t < alignment.cols; ++t) {
    const std::size_t cur = argmax_column(alignment, t);
    if (cur == prev || cur == prev + 1) ++good;
    prev = cur;
  }
  return static_cast<double>(good) / static_cast<double>(alignment.cols - 1);
}

double f0_rmse_cents(const std::vector<double>& predicted_log_f0, const std::vector<double>& truth_log_f0,
                     const std::vector<double>& truth_vuv) {
  if (predicted_log_f0.size() != truth_log_f0.size() || truth_vuv.size() != truth_log_f0.size()) {
    throw DimensionError("f0_rmse_cents: inputs differ in length");
  }
  const double to_cents = 1200.0 / std::numbers::ln2;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < truth_log_f0.size(); ++f) {
    if (truth_vuv[f] < 0.5) continue;
    const double d = (predicted_log_f0[f] - truth_log_f0[f]) * to_cents;
    sum += d * d;
    ++count;
  }
  return count ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
}

}  // namespace npat::synth
