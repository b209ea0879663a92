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

#include "run/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>

#include "common/error.hpp"
#include "common/format.hpp"

namespace npat::run {

using attention::Transition;

const std::vector<std::string>& mode_names() {
  static const std::vector<std::string> names = {"base", "nf", "np", "npnf", "prop",
                                                 "noatt", "notrans", "ptrans", "ttrans"};
  return names;
}

ModeToggles mode_toggles(std::string_view mode) {
  ModeToggles t;
  if (mode == "prop") return t;
  if (mode == "base") return {false, false, false, Transition::kFull, false};
  if (mode == "nf") return {false, true, false, Transition::kFull, false};
  if (mode == "np") return {true, false, false, Transition::kFull, false};
  if (mode == "npnf") return {true, true, false, Transition::kFull, false};
  if (mode == "noatt") return {true, true, false, Transition::kFull, true};
  if (mode == "notrans") t.transition = Transition::kFixedHalf;
  else if (mode == "ptrans") t.transition = Transition::kPhonemeOnly;
  else if (mode == "ttrans") t.transition = Transition::kTimeOnly;
  else throw ConfigError("unknown mode '" + std::string(mode) + "'");
  return t;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
std::string to_text(const T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_floating_point_v<T>) {
    std::string s = format_double(v);
    if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
  } else {
    return std::to_string(v);
  }
}

template <class T>
T from_text(std::string_view text, std::string_view key) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ParseError("expected true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      return std::string(text);
    } else if constexpr (std::is_floating_point_v<T>) {
      return parse_double(text, key);
    } else {
      const long long v = parse_int(text, key);
      if constexpr (std::is_unsigned_v<T>) {
        if (v < 0) throw ParseError("negative value");
      }
      return static_cast<T>(v);
    }
  } catch (const ParseError& e) {
    throw ConfigError("bad value '" + std::string(text) + "' for " + std::string(key) + ": " + e.what());
  }
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

template <class Proj>
Field field(std::string key, Proj proj) {
  using T = std::remove_cvref_t<decltype(proj(std::declval<RunConfig&>()))>;
  return {key, [proj](const RunConfig& c) { return to_text<T>(proj(c)); },
          [proj, key](RunConfig& c, std::string_view v) { proj(c) = from_text<T>(v, key); }};
}

#define NPAT_FIELD(key, expr) field(key, [](auto& c) -> auto& { return expr; })

const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    std::vector<Field> f = {
        NPAT_FIELD("mode", c.mode),
        NPAT_FIELD("data_dir", c.data_dir),
        NPAT_FIELD("out_dir", c.out_dir),
        NPAT_FIELD("checkpoint", c.checkpoint),
        NPAT_FIELD("modes", c.modes),
        NPAT_FIELD("threads", c.threads),
        // training
        NPAT_FIELD("steps", c.steps),
        NPAT_FIELD("batch", c.batch),
        NPAT_FIELD("lr", c.lr),
        NPAT_FIELD("clip", c.clip),
        NPAT_FIELD("lambda", c.lambda),
        NPAT_FIELD("teacher_forcing", c.teacher_forcing),
        NPAT_FIELD("checkpoint_every", c.checkpoint_every),
        NPAT_FIELD("penalty_decay", c.penalty_decay),
        NPAT_FIELD("penalty_shift", c.penalty_shift),
        // model
        NPAT_FIELD("encoder_dim", c.model.encoder_dim),
        NPAT_FIELD("query_dim", c.model.query_dim),
        NPAT_FIELD("decoder_dim", c.model.decoder_dim),
        NPAT_FIELD("prenet1", c.model.prenet1),
        NPAT_FIELD("prenet2", c.model.prenet2),
        NPAT_FIELD("prenet_dropout", c.model.prenet_dropout),
        NPAT_FIELD("aux_embed", c.model.aux_embed),
        NPAT_FIELD("encoder_conv_width", c.model.encoder_conv_width),
        NPAT_FIELD("postnet_channels", c.model.postnet_channels),
        NPAT_FIELD("postnet_layers", c.model.postnet_layers),
        NPAT_FIELD("postnet_width", c.model.postnet_width),
        NPAT_FIELD("reduction", c.model.reduction),
        NPAT_FIELD("att_hidden", c.model.att_hidden),
        NPAT_FIELD("att_embed", c.model.att_embed),
        NPAT_FIELD("att_channels", c.model.att_channels),
        NPAT_FIELD("att_kernel", c.model.att_kernel),
        // corpus
        NPAT_FIELD("num_songs", c.corpus.num_songs),
        NPAT_FIELD("num_train", c.corpus.num_train),
        NPAT_FIELD("min_notes", c.corpus.min_notes),
        NPAT_FIELD("max_notes", c.corpus.max_notes),
        NPAT_FIELD("min_tempo", c.corpus.min_tempo),
        NPAT_FIELD("max_tempo", c.corpus.max_tempo),
        NPAT_FIELD("min_midi", c.corpus.min_midi),
        NPAT_FIELD("max_midi", c.corpus.max_midi),
        NPAT_FIELD("max_pitch_step", c.corpus.max_pitch_step),
        NPAT_FIELD("two_morae_prob", c.corpus.two_morae_prob),
        NPAT_FIELD("consonant_prob", c.corpus.consonant_prob),
        NPAT_FIELD("rest_prob", c.corpus.rest_prob),
        NPAT_FIELD("consonant_mean", c.corpus.consonant_mean),
        NPAT_FIELD("consonant_std", c.corpus.consonant_std),
        NPAT_FIELD("min_consonant", c.corpus.min_consonant),
        NPAT_FIELD("min_vowel", c.corpus.min_vowel),
        NPAT_FIELD("timing_shift_mean", c.corpus.timing_shift_mean),
        NPAT_FIELD("timing_shift_std", c.corpus.timing_shift_std),
        NPAT_FIELD("max_timing_shift", c.corpus.max_timing_shift),
        NPAT_FIELD("noise_std", c.corpus.noise_std),
        NPAT_FIELD("detune_cents", c.corpus.detune_cents),
        NPAT_FIELD("vibrato_cents", c.corpus.vibrato_cents),
        NPAT_FIELD("vibrato_hz", c.corpus.vibrato_hz),
        NPAT_FIELD("frame_shift_ms", c.corpus.frame_shift_ms),
    };
    // Shared between the model and the corpus.
    f.push_back({"acoustic_dim", [](const RunConfig& c) { return to_text(c.model.acoustic_dim); },
                 [](RunConfig& c, std::string_view v) {
                   c.model.acoustic_dim = c.corpus.acoustic_dim = from_text<std::size_t>(v, "acoustic_dim");
                 }});
    f.push_back({"seed", [](const RunConfig& c) { return to_text(c.seed); },
                 [](RunConfig& c, std::string_view v) {
                   c.seed = c.model.seed = c.corpus.seed = from_text<std::uint64_t>(v, "seed");
                 }});
    return f;
  }();
  return all;
}

#undef NPAT_FIELD

const Field& find(std::string_view key) {
  for (const Field& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.push_back(f.key);
  return keys;
}

void set_value(RunConfig& config, std::string_view key, std::string_view value) {
  find(key).set(config, value);
}

std::string get_value(const RunConfig& config, std::string_view key) { return find(key).get(config); }

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    try {
      set_value(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::move(base));
}

std::string format_config(const RunConfig& config) {
  std::string out = "# npat run configuration\n";
  for (const Field& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

void validate(const RunConfig& config) {
  mode_toggles(config.mode);
  for (const std::string& m : split_modes(config.modes)) mode_toggles(m);
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(config.steps >= 0, "steps must be >= 0");
  require(config.batch >= 1, "batch must be >= 1");
  require(config.lr > 0.0 && std::isfinite(config.lr), "lr must be positive");
  require(config.clip >= 0.0, "clip must be >= 0");
  require(config.lambda >= 0.0 && std::isfinite(config.lambda), "lambda must be >= 0");
  require(config.teacher_forcing, "teacher_forcing = false is not supported; training always feeds targets");
  require(config.checkpoint_every >= 0, "checkpoint_every must be >= 0");
  require(config.penalty_decay >= 1, "penalty_decay must be >= 1");
  require(config.penalty_shift >= 0, "penalty_shift must be >= 0");
  require(config.threads >= 0, "threads must be >= 0");
  require(config.model.acoustic_dim == config.corpus.acoustic_dim, "model and corpus acoustic_dim differ");
  net::validate(model_config(config));
  try {
    synth::validate(config.corpus);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

net::ModelConfig model_config(const RunConfig& config) {
  const ModeToggles t = mode_toggles(config.mode);
  net::ModelConfig m = config.model;
  m.mode.use_position = t.use_position;
  m.mode.transition = t.transition;
  m.use_aux = t.use_aux;
  m.oracle_alignment = t.oracle_alignment;
  return m;
}

double effective_lambda(const RunConfig& config) {
  return mode_toggles(config.mode).guided ? config.lambda : 0.0;
}

std::string checkpoint_path(const RunConfig& config) {
  return config.checkpoint.empty() ? config.out_dir + "/checkpoint.npat" : config.checkpoint;
}

std::vector<std::string> split_modes(std::string_view list) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const std::string item = trim(list.substr(pos, comma == std::string_view::npos ? list.npos : comma - pos));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace npat::run
