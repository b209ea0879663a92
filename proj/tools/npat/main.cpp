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

// npat command-line front end. Talks to the library only through npat.h.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "npat/npat.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int exit_code(npat_status s) {
  switch (s) {
    case NPAT_OK: return kExitOk;
    case NPAT_ERR_INVALID_ARGUMENT:
    case NPAT_ERR_PARSE:
    case NPAT_ERR_IO:
    case NPAT_ERR_CONFIG:
    case NPAT_ERR_BUFFER_TOO_SMALL: return kExitUsage;
    default: return kExitRuntime;
  }
}

struct Failure {
  npat_status status;
};

void check(npat_status s) {
  if (s != NPAT_OK) throw Failure{s};
}

std::string fetch(npat_status (*fn)(const npat_report*, char*, size_t, size_t*), const npat_report* r) {
  size_t needed = 0;
  fn(r, nullptr, 0, &needed);
  std::string buf(needed, '\0');
  check(fn(r, buf.data(), buf.size(), &needed));
  buf.resize(needed - 1);
  return buf;
}

std::string config_value(const npat_config* c, const char* key) {
  size_t needed = 0;
  npat_config_get(c, key, nullptr, 0, &needed);
  std::string buf(needed, '\0');
  check(npat_config_get(c, key, buf.data(), buf.size(), &needed));
  buf.resize(needed - 1);
  return buf;
}

struct Options {
  std::string config;
  std::string mode, seed, steps, out, checkpoint, data, modes;
  std::vector<std::string> sets;
  int song = -1;
  std::string score;
  bool quiet = false;
};

class Config {
 public:
  Config() { check(npat_config_new(&c_)); }
  ~Config() { npat_config_free(c_); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;
  npat_config* get() { return c_; }

 private:
  npat_config* c_ = nullptr;
};

class Report {
 public:
  ~Report() { npat_report_free(r_); }
  npat_report** out() { return &r_; }
  const npat_report* get() const { return r_; }

 private:
  npat_report* r_ = nullptr;
};

// defaults < --config file < --set pairs < named flags.
void build_config(npat_config* c, const Options& o, bool out_is_data) {
  if (!o.config.empty()) check(npat_config_load(c, o.config.c_str()));
  for (const std::string& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "npat: --set expects key=value, got '%s'\n", kv.c_str());
      throw Failure{NPAT_ERR_CONFIG};
    }
    check(npat_config_set(c, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
  }
  auto set = [&](const char* key, const std::string& v) {
    if (!v.empty()) check(npat_config_set(c, key, v.c_str()));
  };
  set("mode", o.mode);
  set("seed", o.seed);
  set("steps", o.steps);
  set("checkpoint", o.checkpoint);
  set("data_dir", o.data);
  set("modes", o.modes);
  set(out_is_data ? "data_dir" : "out_dir", o.out);
  check(npat_config_validate(c));
}

struct ProgressState {
  int every = 100;
  int total = 0;
  bool quiet = false;
};

void on_progress(void* user, const char* mode, const npat_step_log* log) {
  auto* st = static_cast<ProgressState*>(user);
  if (st->quiet) return;
  if (log->step % st->every == 0 || log->step == st->total) {
    std::printf("[%s] step %d feat_dec %.5f feat_post %.5f guided %.5f total %.5f\n", mode, log->step, log->feat_dec,
                log->feat_post, log->guided, log->total);
    std::fflush(stdout);
  }
}

int song_command(npat_status (*fn)(const npat_config*, int, const char*), const Options& o, const char* what) {
  if (o.song < 0 && o.score.empty()) {
    std::fprintf(stderr, "npat %s: give --song N or --score PATH\n", what);
    return kExitUsage;
  }
  Config c;
  build_config(c.get(), o, false);
  check(fn(c.get(), o.song, o.score.empty() ? nullptr : o.score.c_str()));
  std::printf("%s written to %s\n", what, config_value(c.get(), "out_dir").c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Note-position-aware attention for singing voice synthesis"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value configuration file");
    sub->add_option("--mode", o.mode, "system: base nf np npnf prop noatt notrans ptrans ttrans");
    sub->add_option("--seed", o.seed, "seed for corpus, initialisation and training");
    sub->add_option("--steps", o.steps, "training steps");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--checkpoint", o.checkpoint, "checkpoint path (default <out>/checkpoint.npat)");
    sub->add_option("--data", o.data, "corpus directory");
    sub->add_option("--set", o.sets, "extra key=value overrides");
    sub->add_flag("--quiet", o.quiet, "suppress progress lines");
  };
  auto song_opts = [&](CLI::App* sub) {
    sub->add_option("--song", o.song, "corpus song index");
    sub->add_option("--score", o.score, "score file instead of a corpus song");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate the synthetic corpus (--out sets the corpus directory)");
  CLI::App* train = app.add_subcommand("train", "train one system");
  CLI::App* synth = app.add_subcommand("synth", "synthesize a song");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test songs");
  CLI::App* align = app.add_subcommand("export-alignment", "write an alignment PGM and note boundaries");
  CLI::App* penalty = app.add_subcommand("export-penalty", "write a penalty matrix as CSV and PGM");
  CLI::App* ablate = app.add_subcommand("ablate", "train and evaluate a list of systems");
  for (CLI::App* sub : {gen, train, synth, eval, align, penalty, ablate}) common(sub);
  for (CLI::App* sub : {synth, align, penalty}) song_opts(sub);
  ablate->add_option("--modes", o.modes, "comma-separated systems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      Config c;
      build_config(c.get(), o, true);
      char sum[17] = {};
      check(npat_gen_data(c.get(), sum));
      std::printf("wrote %s songs to %s\nchecksum %s\n", config_value(c.get(), "num_songs").c_str(),
                  config_value(c.get(), "data_dir").c_str(), sum);
    } else if (train->parsed()) {
      Config c;
      build_config(c.get(), o, false);
      std::string lambda = config_value(c.get(), "lambda");
      const std::string mode = config_value(c.get(), "mode");
      double applied = 0.0;
      check(npat_config_effective_lambda(c.get(), &applied));
      if (applied == 0.0) lambda += " (weighted 0 in this mode)";
      std::printf("mode %s lambda %s steps %s\n", mode.c_str(), lambda.c_str(), config_value(c.get(), "steps").c_str());
      ProgressState st{100, std::stoi(config_value(c.get(), "steps")), o.quiet};
      check(npat_train(c.get(), on_progress, &st));
      std::printf("checkpoint and train_log.csv in %s\n", config_value(c.get(), "out_dir").c_str());
    } else if (synth->parsed()) {
      return song_command(npat_synth, o, "synth");
    } else if (eval->parsed()) {
      Config c;
      build_config(c.get(), o, false);
      Report r;
      check(npat_eval(c.get(), r.out()));
      std::fputs(fetch(npat_report_table, r.get()).c_str(), stdout);
    } else if (align->parsed()) {
      return song_command(npat_export_alignment, o, "export-alignment");
    } else if (penalty->parsed()) {
      return song_command(npat_export_penalty, o, "export-penalty");
    } else if (ablate->parsed()) {
      Config c;
      build_config(c.get(), o, false);
      ProgressState st{100, std::stoi(config_value(c.get(), "steps")), o.quiet};
      Report r;
      check(npat_ablate(c.get(), on_progress, &st, r.out()));
      std::fputs(fetch(npat_report_table, r.get()).c_str(), stdout);
    }
  } catch (const Failure& f) {
    const char* msg = npat_last_error();
    std::fprintf(stderr, "npat: %s%s%s\n", npat_status_name(f.status), *msg ? ": " : "", msg);
    return exit_code(f.status);
  }
  return kExitOk;
}
