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

#include "run/report.hpp"

#include <cstdio>

#include "common/format.hpp"

namespace npat::run {

namespace {

const char* kColumns = "song,feature_loss,guided_loss,timing_mae_frames,monotonicity,f0_rmse_cents,missing_morae";

std::string csv_row(const SongMetrics& m) {
  std::string s = m.song;
  for (double v : {m.feature_loss, m.guided_loss, m.timing_mae, m.monotonicity, m.f0_rmse_cents, m.missing_morae}) {
    s += ',' + format_double(v);
  }
  return s + '\n';
}

std::string table_row(const std::string& label, const SongMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %12.6f %12.6f %10.3f %8.4f %10.2f %8.2f\n", label.c_str(), m.feature_loss,
                m.guided_loss, m.timing_mae, m.monotonicity, m.f0_rmse_cents, m.missing_morae);
  return buf;
}

std::string table_header(const char* first) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %12s %12s %10s %8s %10s %8s\n", first, "feat_loss", "guided", "mae_fr",
                "mono", "f0_cents", "missing");
  return buf;
}

}  // namespace

SongMetrics mean_metrics(const std::vector<SongMetrics>& songs) {
  SongMetrics m;
  m.song = "mean";
  if (songs.empty()) return m;
  for (const SongMetrics& s : songs) {
    m.feature_loss += s.feature_loss;
    m.guided_loss += s.guided_loss;
    m.timing_mae += s.timing_mae;
    m.monotonicity += s.monotonicity;
    m.f0_rmse_cents += s.f0_rmse_cents;
    m.missing_morae += s.missing_morae;
  }
  const double n = static_cast<double>(songs.size());
  m.feature_loss /= n;
  m.guided_loss /= n;
  m.timing_mae /= n;
  m.monotonicity /= n;
  m.f0_rmse_cents /= n;
  m.missing_morae /= n;
  return m;
}

std::string format_csv(const MetricsReport& report) {
  std::string out = std::string(kColumns) + '\n';
  for (const SongMetrics& s : report.songs) out += csv_row(s);
  return out + csv_row(report.aggregate);
}

std::string format_csv(const std::vector<MetricsReport>& reports) {
  std::string out = std::string("mode,") + kColumns + '\n';
  for (const MetricsReport& r : reports) {
    for (const SongMetrics& s : r.songs) out += r.mode + ',' + csv_row(s);
    out += r.mode + ',' + csv_row(r.aggregate);
  }
  return out;
}

std::string format_table(const MetricsReport& report) {
  std::string out = "mode " + report.mode + "\n" + table_header("song");
  for (const SongMetrics& s : report.songs) out += table_row(s.song, s);
  return out + table_row("mean", report.aggregate);
}

std::string format_summary(const std::vector<MetricsReport>& reports) {
  std::string out = table_header("mode");
  for (const MetricsReport& r : reports) out += table_row(r.mode, r.aggregate);
  return out;
}

}  // namespace npat::run
