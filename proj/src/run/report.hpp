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

#include <string>
#include <vector>

namespace npat::run {

struct SongMetrics {
  std::string song;
  double feature_loss = 0.0;  // post-net output against the targets
  double guided_loss = 0.0;
  double timing_mae = 0.0;  // frames
  double monotonicity = 0.0;
  double f0_rmse_cents = 0.0;  // voiced frames only
  double missing_morae = 0.0;
  bool operator==(const SongMetrics&) const = default;
};

struct MetricsReport {
  std::string mode;
  std::vector<SongMetrics> songs;
  SongMetrics aggregate;  // means over `songs`, named "mean"
  bool operator==(const MetricsReport&) const = default;
};

SongMetrics mean_metrics(const std::vector<SongMetrics>& songs);

// Header, one row per song, then the aggregate row.
std::string format_csv(const MetricsReport& report);
// Same rows with a leading mode column; one header for all reports.
std::string format_csv(const std::vector<MetricsReport>& reports);
std::string format_table(const MetricsReport& report);
// One aggregate row per report.
std::string format_summary(const std::vector<MetricsReport>& reports);

}  // namespace npat::run
