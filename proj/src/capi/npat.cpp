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

#include "npat/npat.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "run/commands.hpp"
#include "run/config.hpp"
#include "run/report.hpp"
#include "score/score.hpp"
#include "synthdata/corpus.hpp"

struct npat_config {
  npat::run::RunConfig value;
};

struct npat_report {
  std::vector<npat::run::MetricsReport> reports;
};

namespace {

thread_local std::string g_last_error;

npat_status fail(npat_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs body, translating exceptions into status codes.
template <class F>
npat_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return NPAT_OK;
  } catch (const npat::Error& e) {
    return fail(static_cast<npat_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(NPAT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NPAT_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(NPAT_ERR_INTERNAL, "unknown error");
  }
}

npat_status copy_out(const std::string& text, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = text.size() + 1;
  if (!buf || cap < text.size() + 1) {
    return fail(NPAT_ERR_BUFFER_TOO_SMALL, "buffer needs " + std::to_string(text.size() + 1) + " bytes");
  }
  std::memcpy(buf, text.c_str(), text.size() + 1);
  g_last_error.clear();
  return NPAT_OK;
}

void require(bool ok, const char* what) {
  if (!ok) throw npat::InvalidArgument(what);
}

void write_checksum(std::uint64_t h, char out[17]) {
  const std::string hex = npat::synth::checksum_hex(h);
  std::memcpy(out, hex.c_str(), 17);
}

npat_step_log to_c(const npat::net::StepLog& s) {
  return {s.step, s.report.feat_decoder, s.report.feat_postnet, s.report.guided, s.report.total, s.grad_norm};
}

npat_metrics to_c(const npat::run::SongMetrics& m) {
  return {m.feature_loss, m.guided_loss, m.timing_mae, m.monotonicity, m.f0_rmse_cents, m.missing_morae};
}

// Score and optional ground-truth path for a song-level command.
struct SongSource {
  npat::score::Score score;
  std::vector<int> path;
  bool has_path = false;
  std::string name;
};

SongSource song_source(const npat::run::RunConfig& c, int song_index, const char* score_path) {
  SongSource s;
  if (song_index >= 0) {
    npat::synth::Corpus corpus = npat::run::load_data(c);
    if (static_cast<std::size_t>(song_index) >= corpus.songs.size()) {
      throw npat::InvalidArgument("song " + std::to_string(song_index) + " is out of range; corpus has " +
                                  std::to_string(corpus.songs.size()) + " songs");
    }
    npat::synth::Song& song = corpus.songs[static_cast<std::size_t>(song_index)];
    s.score = std::move(song.score);
    s.path = std::move(song.truth.alignment);
    s.has_path = true;
    s.name = npat::run::song_name(static_cast<std::size_t>(song_index));
    return s;
  }
  require(score_path && *score_path, "give a song index or a score path");
  s.score = npat::score::load_score(score_path);
  std::string stem = score_path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.rfind('.'); dot != std::string::npos && dot > 0) stem = stem.substr(0, dot);
  s.name = stem;
  return s;
}

}  // namespace

extern "C" {

const char* npat_last_error(void) { return g_last_error.c_str(); }

const char* npat_status_name(npat_status status) {
  switch (status) {
    case NPAT_OK: return "ok";
    case NPAT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case NPAT_ERR_DIMENSION: return "dimension mismatch";
    case NPAT_ERR_NUMERIC: return "numeric failure";
    case NPAT_ERR_PARSE: return "parse error";
    case NPAT_ERR_IO: return "i/o error";
    case NPAT_ERR_CONFIG: return "config error";
    case NPAT_ERR_ALIGNMENT_COLLAPSE: return "alignment collapse";
    case NPAT_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case NPAT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* npat_version(void) { return "0.1.0"; }

npat_status npat_config_new(npat_config** out) {
  return guarded([&] {
    require(out, "npat_config_new: out is null");
    *out = new npat_config{};
  });
}

void npat_config_free(npat_config* config) { delete config; }

npat_status npat_config_load(npat_config* config, const char* path) {
  return guarded([&] {
    require(config && path, "npat_config_load: null argument");
    config->value = npat::run::load_config(path, config->value);
  });
}

npat_status npat_config_set(npat_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config && key && value, "npat_config_set: null argument");
    npat::run::set_value(config->value, key, value);
  });
}

npat_status npat_config_get(const npat_config* config, const char* key, char* buf, size_t cap, size_t* needed) {
  std::string text;
  npat_status s = guarded([&] {
    require(config && key, "npat_config_get: null argument");
    text = npat::run::get_value(config->value, key);
  });
  return s == NPAT_OK ? copy_out(text, buf, cap, needed) : s;
}

npat_status npat_config_format(const npat_config* config, char* buf, size_t cap, size_t* needed) {
  if (!config) return fail(NPAT_ERR_INVALID_ARGUMENT, "npat_config_format: config is null");
  return copy_out(npat::run::format_config(config->value), buf, cap, needed);
}

npat_status npat_config_validate(const npat_config* config) {
  return guarded([&] {
    require(config, "npat_config_validate: config is null");
    npat::run::validate(config->value);
  });
}

npat_status npat_config_effective_lambda(const npat_config* config, double* out) {
  return guarded([&] {
    require(config && out, "npat_config_effective_lambda: null argument");
    *out = npat::run::effective_lambda(config->value);
  });
}

size_t npat_mode_count(void) { return npat::run::mode_names().size(); }

const char* npat_mode_name(size_t index) {
  const auto& names = npat::run::mode_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

void npat_report_free(npat_report* report) { delete report; }

size_t npat_report_modes(const npat_report* report) { return report ? report->reports.size() : 0; }

size_t npat_report_songs(const npat_report* report) {
  return report && !report->reports.empty() ? report->reports.front().songs.size() : 0;
}

npat_status npat_report_get(const npat_report* report, size_t mode, size_t song, npat_metrics* out) {
  return guarded([&] {
    require(report && out, "npat_report_get: null argument");
    require(mode < report->reports.size(), "npat_report_get: mode out of range");
    const auto& r = report->reports[mode];
    require(song <= r.songs.size(), "npat_report_get: song out of range");
    *out = to_c(song == r.songs.size() ? r.aggregate : r.songs[song]);
  });
}

npat_status npat_report_csv(const npat_report* report, char* buf, size_t cap, size_t* needed) {
  if (!report || report->reports.empty()) return fail(NPAT_ERR_INVALID_ARGUMENT, "npat_report_csv: empty report");
  const std::string text = report->reports.size() == 1 ? npat::run::format_csv(report->reports.front())
                                                       : npat::run::format_csv(report->reports);
  return copy_out(text, buf, cap, needed);
}

npat_status npat_report_table(const npat_report* report, char* buf, size_t cap, size_t* needed) {
  if (!report || report->reports.empty()) {
    return fail(NPAT_ERR_INVALID_ARGUMENT, "npat_report_table: empty report");
  }
  const std::string text = report->reports.size() == 1 ? npat::run::format_table(report->reports.front())
                                                       : npat::run::format_summary(report->reports);
  return copy_out(text, buf, cap, needed);
}

npat_status npat_gen_data(const npat_config* config, char checksum[17]) {
  return guarded([&] {
    require(config && checksum, "npat_gen_data: null argument");
    write_checksum(npat::run::generate_data(config->value), checksum);
  });
}

npat_status npat_corpus_checksum(const npat_config* config, char checksum[17]) {
  return guarded([&] {
    require(config && checksum, "npat_corpus_checksum: null argument");
    write_checksum(npat::synth::corpus_checksum(npat::run::load_data(config->value)), checksum);
  });
}

npat_status npat_train(const npat_config* config, npat_progress_fn progress, void* user) {
  return guarded([&] {
    require(config, "npat_train: config is null");
    const auto& c = config->value;
    npat::run::validate(c);
    const npat::synth::Corpus corpus = npat::run::load_data(c);
    npat::run::train_model(c, corpus, [&](const npat::net::StepLog& s, const npat::ad::ParamSet&) {
      if (progress) {
        const npat_step_log log = to_c(s);
        progress(user, c.mode.c_str(), &log);
      }
    });
  });
}

npat_status npat_eval(const npat_config* config, npat_report** out) {
  return guarded([&] {
    require(config && out, "npat_eval: null argument");
    const auto& c = config->value;
    npat::run::validate(c);
    const npat::synth::Corpus corpus = npat::run::load_data(c);
    const npat::ad::ParamSet params = npat::run::load_model(c, npat::run::checkpoint_path(c));
    auto report = std::make_unique<npat_report>();
    report->reports.push_back(npat::run::evaluate(c, params, corpus));
    if (!c.out_dir.empty()) npat::run::write_report(c.out_dir, report->reports.front());
    *out = report.release();
  });
}

npat_status npat_synth(const npat_config* config, int song_index, const char* score_path) {
  return guarded([&] {
    require(config, "npat_synth: config is null");
    const auto& c = config->value;
    npat::run::validate(c);
    const SongSource s = song_source(c, song_index, score_path);
    const npat::ad::ParamSet params = npat::run::load_model(c, npat::run::checkpoint_path(c));
    if (npat::run::mode_toggles(c.mode).oracle_alignment && !s.has_path) {
      throw npat::InvalidArgument("noatt mode needs a corpus song for its ground-truth alignment");
    }
    npat::run::synthesize_to_files(c, params, s.score, s.has_path ? &s.path : nullptr, s.name);
  });
}

npat_status npat_export_alignment(const npat_config* config, int song_index, const char* score_path) {
  return guarded([&] {
    require(config, "npat_export_alignment: config is null");
    const auto& c = config->value;
    npat::run::validate(c);
    const SongSource s = song_source(c, song_index, score_path);
    const npat::ad::ParamSet params = npat::run::load_model(c, npat::run::checkpoint_path(c));
    if (npat::run::mode_toggles(c.mode).oracle_alignment && !s.has_path) {
      throw npat::InvalidArgument("noatt mode needs a corpus song for its ground-truth alignment");
    }
    npat::run::export_alignment(c, params, s.score, s.has_path ? &s.path : nullptr, s.name);
  });
}

npat_status npat_export_penalty(const npat_config* config, int song_index, const char* score_path) {
  return guarded([&] {
    require(config, "npat_export_penalty: config is null");
    const auto& c = config->value;
    npat::run::validate(c);
    const SongSource s = song_source(c, song_index, score_path);
    npat::run::export_penalty(c, s.score, s.name);
  });
}

npat_status npat_ablate(const npat_config* config, npat_progress_fn progress, void* user, npat_report** out) {
  return guarded([&] {
    require(config && out, "npat_ablate: null argument");
    const auto& c = config->value;
    npat::run::validate(c);
    const npat::synth::Corpus corpus = npat::run::load_data(c);
    auto report = std::make_unique<npat_report>();
    report->reports = npat::run::ablate(c, corpus, [&](const std::string& mode, const npat::net::StepLog& s) {
      if (progress) {
        const npat_step_log log = to_c(s);
        progress(user, mode.c_str(), &log);
      }
    });
    *out = report.release();
  });
}

}  // extern "C"
