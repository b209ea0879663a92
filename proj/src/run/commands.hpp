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
#include <functional>
#include <string>
#include <vector>

#include "network/trainer.hpp"
#include "run/config.hpp"
#include "run/report.hpp"
#include "synthdata/corpus.hpp"

namespace npat::run {

// Writes the corpus to config.data_dir; returns its checksum.
std::uint64_t generate_data(const RunConfig& config);
// Loads config.data_dir and checks it against the configured acoustic_dim.
synth::Corpus load_data(const RunConfig& config);

struct TrainResult {
  std::vector<net::StepLog> log;
  ad::ParamSet params;
  std::string checkpoint;  // empty when out_dir is empty
};

// Called after every step with the updated parameters.
using TrainProgress = std::function<void(const net::StepLog&, const ad::ParamSet&)>;

// Trains on the corpus' training split. With a non-empty out_dir it writes
// config.txt, train_log.csv and a checkpoint every checkpoint_every steps
// plus one at the end. On a non-finite loss or gradient it throws
// NumericError; the checkpoint on disk stays the last good one.
TrainResult train_model(const RunConfig& config, const synth::Corpus& corpus, const TrainProgress& progress = {});

// Teacher-forced post-net feature loss averaged over the training songs,
// dropout off.
double training_feature_loss(const RunConfig& config, const ad::ParamSet& params, const synth::Corpus& corpus);

// Synthesizes every test song and scores it. Songs run on config.threads
// workers; the report is in song order either way.
MetricsReport evaluate(const RunConfig& config, const ad::ParamSet& params, const synth::Corpus& corpus);
SongMetrics evaluate_song(const RunConfig& config, const ad::ParamSet& params, const synth::Song& song,
                          const std::string& name);

// Loads a checkpoint and checks it against the configured model.
ad::ParamSet load_model(const RunConfig& config, const std::string& path);

std::string song_name(std::size_t index);

// Binary PGM, one row per phoneme, each column scaled so its maximum is 255.
std::string alignment_pgm(const Matrix& alignment);
// Penalties in [0, 1] scaled to 0..255.
std::string penalty_pgm(const Matrix& penalty);
std::string matrix_csv(const Matrix& m);
// note,kind,start_frame,end_frame,start_step,end_step,first_phoneme,last_phoneme
std::string note_boundaries_csv(const score::Score& score, int reduction);

struct ExportedFiles {
  std::vector<std::string> paths;
};

// Writes <out_dir>/<name>.feat (log F0 channel as residual) and <name>.f0
// (absolute log F0 per frame). `oracle_path` is needed in noatt mode.
ExportedFiles synthesize_to_files(const RunConfig& config, const ad::ParamSet& params, const score::Score& score,
                                  const std::vector<int>* oracle_path, const std::string& name);
ExportedFiles export_alignment(const RunConfig& config, const ad::ParamSet& params, const score::Score& score,
                               const std::vector<int>* oracle_path, const std::string& name);
ExportedFiles export_penalty(const RunConfig& config, const score::Score& score, const std::string& name);

// Trains and evaluates each mode of config.modes into <out_dir>/<mode>, then
// writes the merged ablation.csv and ablation.txt to out_dir.
using ModeProgress = std::function<void(const std::string& mode, const net::StepLog&)>;
std::vector<MetricsReport> ablate(const RunConfig& config, const synth::Corpus& corpus,
                                  const ModeProgress& progress = {});

// metrics.csv and metrics.txt under dir.
void write_report(const std::string& dir, const MetricsReport& report);
void write_text(const std::string& path, const std::string& text);

}  // namespace npat::run
