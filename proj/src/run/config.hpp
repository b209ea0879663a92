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
#include <string_view>
#include <vector>

#include "attention/attention.hpp"
#include "network/model.hpp"
#include "synthdata/corpus.hpp"

namespace npat::run {

// Component toggles of one named system.
struct ModeToggles {
  bool use_position = true;
  bool use_aux = true;
  bool guided = true;
  attention::Transition transition = attention::Transition::kFull;
  bool oracle_alignment = false;
  bool operator==(const ModeToggles&) const = default;
};

// base nf np npnf prop noatt notrans ptrans ttrans.
const std::vector<std::string>& mode_names();
// Throws ConfigError for an unknown name.
ModeToggles mode_toggles(std::string_view mode);

struct RunConfig {
  std::string mode = "prop";
  net::ModelConfig model;
  synth::CorpusSpec corpus;

  int steps = 2000;
  int batch = 1;
  double lr = 1e-3;
  double clip = 1.0;
  double lambda = 10.0;
  bool teacher_forcing = true;
  int checkpoint_every = 500;
  int penalty_decay = 60;
  int penalty_shift = 15;
  std::uint64_t seed = 1;
  int threads = 0;  // eval workers; 0 picks the hardware concurrency

  std::string data_dir = "data";
  std::string out_dir = "out";
  std::string checkpoint;  // empty means <out_dir>/checkpoint.npat
  std::string modes = "base,prop,ttrans";  // for ablate

  bool operator==(const RunConfig&) const = default;
};

// Keys accepted by set_value and written by format_config, in file order.
std::vector<std::string> config_keys();

// Throws ConfigError for an unknown key or an unparsable value.
void set_value(RunConfig& config, std::string_view key, std::string_view value);
std::string get_value(const RunConfig& config, std::string_view key);

// Flat `key = value` lines; `#` starts a comment. Later lines win. Values are
// applied on top of `base`.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});
std::string format_config(const RunConfig& config);

// Throws ConfigError naming the first bad field.
void validate(const RunConfig& config);

// Model configuration with the mode toggles applied.
net::ModelConfig model_config(const RunConfig& config);
// lambda, or 0 when the mode trains without the guided loss.
double effective_lambda(const RunConfig& config);
std::string checkpoint_path(const RunConfig& config);
std::vector<std::string> split_modes(std::string_view list);

}  // namespace npat::run
