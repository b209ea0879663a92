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

#include "run/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#include "common/error.hpp"
#include "common/format.hpp"
#include "loss/loss.hpp"
#include "network/checkpoint.hpp"
#include "synthdata/metrics.hpp"

namespace npat::run {

namespace fs = std::filesystem;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir + "'");
}

std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

// Targets with the log F0 channel replaced by absolute log F0.
Matrix absolute_targets(const synth::Song& song) {
  Matrix m = song.truth.frames;
  const std::vector<double> f0 = synth::truth_log_f0(song.score, song.truth);
  const std::size_t ch = synth::residual_channel(m.cols);
  for (std::size_t f = 0; f < m.rows; ++f) m(f, ch) = f0[f];
  return m;
}

}  // namespace

std::string song_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "song_%04zu", index);
  return buf;
}

std::uint64_t generate_data(const RunConfig& config) {
  validate(config);
  ensure_dir(config.data_dir);
  return synth::write_corpus(synth::generate_corpus(config.corpus), config.data_dir);
}

synth::Corpus load_data(const RunConfig& config) {
  synth::Corpus c = synth::load_corpus(config.data_dir);
  if (c.acoustic_dim != config.model.acoustic_dim) {
    throw ConfigError("corpus in " + config.data_dir + " has acoustic_dim " + std::to_string(c.acoustic_dim) +
                      ", config says " + std::to_string(config.model.acoustic_dim));
  }
  return c;
}

ad::ParamSet load_model(const RunConfig& config, const std::string& path) {
  ad::ParamSet p = net::load_checkpoint(path);
  try {
    net::check_params(model_config(config), p);
  } catch (const DimensionError& e) {
    throw DimensionError("checkpoint " + path + " does not match the config: " + e.what());
  }
  return p;
}

namespace {

// Training examples point into the corpus and into f0.
struct TrainingSet {
  std::vector<std::vector<double>> f0;
  std::vector<net::TrainingExample> examples;

  explicit TrainingSet(const synth::Corpus& corpus) {
    if (corpus.num_train <= 0) throw InvalidArgument("corpus has no training songs");
    const auto n = static_cast<std::size_t>(corpus.num_train);
    f0.reserve(n);
    for (std::size_t k = 0; k < n; ++k) f0.push_back(synth::truth_log_f0(corpus.songs[k].score, corpus.songs[k].truth));
    for (std::size_t k = 0; k < n; ++k) {
      const synth::Song& s = corpus.songs[k];
      examples.push_back({&s.score, &s.truth.frames, &f0[k], &s.truth.alignment});
    }
  }
  TrainingSet(const TrainingSet&) = delete;
  TrainingSet& operator=(const TrainingSet&) = delete;
};

}  // namespace

double training_feature_loss(const RunConfig& config, const ad::ParamSet& params, const synth::Corpus& corpus) {
  const TrainingSet set(corpus);
  const net::ModelConfig mc = model_config(config);
  net::TeacherOptions opts;
  opts.lambda = 0.0;
  opts.penalty_decay = config.penalty_decay;
  opts.penalty_shift = config.penalty_shift;
  double sum = 0.0;
  for (const net::TrainingExample& ex : set.examples) {
    ad::Graph g;
    sum += net::forward_teacher(g, mc, params, ex, opts).report.feat_postnet;
  }
  return sum / static_cast<double>(set.examples.size());
}

TrainResult train_model(const RunConfig& config, const synth::Corpus& corpus, const TrainProgress& progress) {
  validate(config);
  const TrainingSet set(corpus);
  const std::vector<net::TrainingExample>& examples = set.examples;
  const net::ModelConfig mc = model_config(config);

  TrainResult result;
  result.params = net::init_params(mc);
  const bool write = !config.out_dir.empty();
  std::ofstream log;
  if (write) {
    ensure_dir(config.out_dir);
    result.checkpoint = checkpoint_path(config);
    write_text(join(config.out_dir, "config.txt"), format_config(config));
    log.open(join(config.out_dir, "train_log.csv"), std::ios::binary);
    if (!log) throw IoError("cannot write " + join(config.out_dir, "train_log.csv"));
    log << "step,feat_dec,feat_post,guided,total\n";
    net::save_checkpoint(result.params, result.checkpoint);
  }

  net::TrainOptions options;
  options.steps = config.steps;
  options.batch = config.batch;
  options.lambda = effective_lambda(config);
  options.penalty_decay = config.penalty_decay;
  options.penalty_shift = config.penalty_shift;
  options.seed = config.seed;
  options.adam.lr = config.lr;
  options.adam.clip = config.clip;
  net::Adam adam(options.adam);

  auto on_step = [&](const net::StepLog& s, const ad::ParamSet& params) {
    const loss::LossReport& r = s.report;
    if (!std::isfinite(r.total)) {
      throw NumericError("non-finite loss at step " + std::to_string(s.step));
    }
    if (write) {
      log << s.step << ',' << format_double(r.feat_decoder) << ',' << format_double(r.feat_postnet) << ','
          << format_double(r.guided) << ',' << format_double(r.total) << '\n';
      log.flush();
      if (config.checkpoint_every > 0 && s.step % config.checkpoint_every == 0) {
        net::save_checkpoint(params, result.checkpoint);
      }
    }
    result.log.push_back(s);
    if (progress) progress(s, params);
  };
  try {
    net::train(mc, result.params, examples, options, adam, on_step);
  } catch (const NumericError& e) {
    std::string where = write ? "; last good checkpoint kept at " + result.checkpoint : "";
    throw NumericError(std::string("training aborted: ") + e.what() + where);
  }
  if (write) net::save_checkpoint(result.params, result.checkpoint);
  return result;
}

SongMetrics evaluate_song(const RunConfig& config, const ad::ParamSet& params, const synth::Song& song,
                          const std::string& name) {
  const net::ModelConfig mc = model_config(config);
  const net::Synthesis syn = net::synthesize(mc, params, song.score, &song.truth.alignment);
  const std::size_t frames = song.truth.alignment.size();

  SongMetrics m;
  m.song = name;
  m.feature_loss = loss::feature_loss(absolute_targets(song), syn.frames);
  const loss::PenaltyMatrix g = loss::penalty_matrix(song.score, mc.reduction, config.penalty_decay,
                                                     config.penalty_shift);
  m.guided_loss = loss::guided_attention_loss(g.g, syn.alignment);
  const std::vector<int> path = synth::frame_path(syn.alignment, mc.reduction, frames);
  const synth::TimingReport timing = synth::timing_error(path, song.score, song.truth.alignment);
  m.timing_mae = timing.mae_frames;
  m.missing_morae = static_cast<double>(timing.missing);
  m.monotonicity = synth::monotonicity_rate(syn.alignment);
  std::vector<double> vuv(frames);
  const std::size_t vc = synth::vuv_channel(song.truth.frames.cols);
  for (std::size_t f = 0; f < frames; ++f) vuv[f] = song.truth.frames(f, vc);
  m.f0_rmse_cents = synth::f0_rmse_cents(syn.log_f0, synth::truth_log_f0(song.score, song.truth), vuv);
  return m;
}

MetricsReport evaluate(const RunConfig& config, const ad::ParamSet& params, const synth::Corpus& corpus) {
  validate(config);
  net::check_params(model_config(config), params);
  const std::size_t first = static_cast<std::size_t>(corpus.num_train);
  if (first >= corpus.songs.size()) throw InvalidArgument("corpus has no test songs");
  const std::size_t count = corpus.songs.size() - first;

  MetricsReport report;
  report.mode = config.mode;
  report.songs.resize(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        report.songs[i] = evaluate_song(config, params, corpus.songs[first + i], song_name(first + i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t workers = config.threads > 0 ? static_cast<std::size_t>(config.threads)
                                           : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  report.aggregate = mean_metrics(report.songs);
  return report;
}

std::string alignment_pgm(const Matrix& a) {
  std::string out = "P5\n" + std::to_string(a.cols) + " " + std::to_string(a.rows) + "\n255\n";
  std::vector<double> colmax(a.cols, 0.0);
  for (std::size_t n = 0; n < a.rows; ++n) {
    for (std::size_t t = 0; t < a.cols; ++t) colmax[t] = std::max(colmax[t], a(n, t));
  }
  for (std::size_t n = 0; n < a.rows; ++n) {
    for (std::size_t t = 0; t < a.cols; ++t) {
      const double v = colmax[t] > 0.0 ? a(n, t) / colmax[t] : 0.0;
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    }
  }
  return out;
}

std::string penalty_pgm(const Matrix& g) {
  std::string out = "P5\n" + std::to_string(g.cols) + " " + std::to_string(g.rows) + "\n255\n";
  for (double v : g.data) {
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
  return out;
}

std::string matrix_csv(const Matrix& m) {
  std::string out;
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

std::string note_boundaries_csv(const score::Score& score, int reduction) {
  const std::vector<score::PhonemeEntry> entries = score::flatten(score);
  std::string out = "note,kind,start_frame,end_frame,start_step,end_step,first_phoneme,last_phoneme\n";
  for (std::size_t k = 0; k < score.notes.size(); ++k) {
    const score::Note& note = score.notes[k];
    std::size_t first = entries.size(), last = 0;
    for (std::size_t n = 0; n < entries.size(); ++n) {
      if (entries[n].note_index != static_cast<int>(k)) continue;
      first = std::min(first, n);
      last = std::max(last, n);
    }
    out += std::to_string(k) + ',' + (note.is_rest() ? "rest" : "note") + ',' + std::to_string(note.start_frame) +
           ',' + std::to_string(note.end_frame) + ',' + std::to_string(note.start_frame / reduction) + ',' +
           std::to_string((note.end_frame + reduction - 1) / reduction) + ',' + std::to_string(first) + ',' +
           std::to_string(last) + '\n';
  }
  return out;
}

ExportedFiles synthesize_to_files(const RunConfig& config, const ad::ParamSet& params, const score::Score& score,
                                  const std::vector<int>* oracle_path, const std::string& name) {
  const net::Synthesis syn = net::synthesize(model_config(config), params, score, oracle_path);
  ensure_dir(config.out_dir);
  ExportedFiles files;
  files.paths = {join(config.out_dir, name + ".feat"), join(config.out_dir, name + ".f0")};
  write_text(files.paths[0], synth::format_features(syn.residual_frames));
  std::string f0;
  for (double v : syn.log_f0) f0 += format_double(v) + '\n';
  write_text(files.paths[1], f0);
  return files;
}

ExportedFiles export_alignment(const RunConfig& config, const ad::ParamSet& params, const score::Score& score,
                               const std::vector<int>* oracle_path, const std::string& name) {
  const net::ModelConfig mc = model_config(config);
  const net::Synthesis syn = net::synthesize(mc, params, score, oracle_path);
  ensure_dir(config.out_dir);
  ExportedFiles files;
  files.paths = {join(config.out_dir, name + ".alignment.pgm"), join(config.out_dir, name + ".notes.csv")};
  write_text(files.paths[0], alignment_pgm(syn.alignment));
  write_text(files.paths[1], note_boundaries_csv(score, mc.reduction));
  return files;
}

ExportedFiles export_penalty(const RunConfig& config, const score::Score& score, const std::string& name) {
  const loss::PenaltyMatrix g =
      loss::penalty_matrix(score, config.model.reduction, config.penalty_decay, config.penalty_shift);
  ensure_dir(config.out_dir);
  ExportedFiles files;
  files.paths = {join(config.out_dir, name + ".penalty.csv"), join(config.out_dir, name + ".penalty.pgm")};
  write_text(files.paths[0], matrix_csv(g.g));
  write_text(files.paths[1], penalty_pgm(g.g));
  return files;
}

void write_report(const std::string& dir, const MetricsReport& report) {
  ensure_dir(dir);
  write_text(join(dir, "metrics.csv"), format_csv(report));
  write_text(join(dir, "metrics.txt"), format_table(report));
}

std::vector<MetricsReport> ablate(const RunConfig& config, const synth::Corpus& corpus,
                                  const ModeProgress& progress) {
  validate(config);
  const std::vector<std::string> modes = split_modes(config.modes);
  if (modes.empty()) throw ConfigError("modes is empty");
  std::vector<MetricsReport> reports;
  for (const std::string& mode : modes) {
    RunConfig c = config;
    c.mode = mode;
    c.checkpoint.clear();
    c.out_dir = config.out_dir.empty() ? "" : join(config.out_dir, mode);
    TrainResult trained = train_model(c, corpus, [&](const net::StepLog& s, const ad::ParamSet&) {
      if (progress) progress(mode, s);
    });
    reports.push_back(evaluate(c, trained.params, corpus));
    if (!c.out_dir.empty()) write_report(c.out_dir, reports.back());
  }
  if (!config.out_dir.empty()) {
    write_text(join(config.out_dir, "ablation.csv"), format_csv(reports));
    write_text(join(config.out_dir, "ablation.txt"), format_summary(reports));
  }
  return reports;
}

}  // namespace npat::run
