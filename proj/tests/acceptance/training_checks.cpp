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

// Criteria 5 to 8: desk-scale training, ablation trend, oracle-alignment floor,
// determinism. Every job trains on its own thread.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "acceptance.hpp"
#include "common/error.hpp"
#include "run/commands.hpp"
#include "synthdata/corpus.hpp"

namespace npat::acceptance {
namespace {

struct Job {
  std::string name;
  run::RunConfig config;
  bool evaluate = true;
  int probe_every = 0;  // > 0 records the dropout-free training-set loss
  // Filled by the worker.
  std::vector<std::pair<int, double>> probes;
  std::vector<net::StepLog> log;
  std::optional<run::MetricsReport> report;
  double train_cpu_seconds = 0.0;
  std::string error;
};

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::mutex print_mutex;

void run_job(Job& job) {
  try {
    const synth::Corpus corpus = synth::generate_corpus(job.config.corpus);
    const int every = std::max(1, job.config.steps / 10);
    const double t0 = thread_cpu_seconds();
    run::TrainResult r = run::train_model(job.config, corpus, [&](const net::StepLog& l, const ad::ParamSet& p) {
      if (job.probe_every > 0 && l.step % job.probe_every == 0) {
        job.probes.emplace_back(l.step, run::training_feature_loss(job.config, p, corpus));
        std::lock_guard<std::mutex> lock(print_mutex);
        std::printf("  [%s] step %d training-set feature loss %.6f\n", job.name.c_str(), l.step, job.probes.back().second);
      }
      if (l.step % every != 0) return;
      std::lock_guard<std::mutex> lock(print_mutex);
      std::printf("  [%s] step %d feat_post %.5f guided %.5f\n", job.name.c_str(), l.step, l.report.feat_postnet,
                  l.report.guided);
      std::fflush(stdout);
    });
    job.train_cpu_seconds = thread_cpu_seconds() - t0;
    job.log = std::move(r.log);
    if (job.evaluate) {
      job.report = run::evaluate(job.config, r.params, corpus);
      run::write_report(job.config.out_dir, *job.report);
    }
  } catch (const std::exception& e) {
    job.error = e.what();
  }
}

run::RunConfig job_config(const Settings& s, const std::string& mode, int steps, const std::string& dir) {
  run::RunConfig c;
  c.mode = mode;
  c.steps = steps;
  c.threads = 1;
  c.checkpoint_every = steps;
  c.out_dir = (std::filesystem::path(s.work_dir) / dir).string();
  return c;
}

bool same_log(const std::vector<net::StepLog>& a, const std::vector<net::StepLog>& b, std::size_t n) {
  if (a.size() < n || b.size() < n) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = a[i].report;
    const auto& y = b[i].report;
    if (a[i].step != b[i].step || x.feat_decoder != y.feat_decoder || x.feat_postnet != y.feat_postnet ||
        x.guided != y.guided || x.total != y.total || a[i].grad_norm != b[i].grad_norm) {
      return false;
    }
  }
  return true;
}

Outcome failed_job(int criterion, const std::string& title, const Job& job) {
  Outcome o{criterion, title};
  o.detail = "job " + job.name + " failed: " + job.error;
  return o;
}

}  // namespace

std::vector<Outcome> training_criteria(const Settings& s, const std::vector<int>& wanted) {
  auto want = [&](int c) { return std::find(wanted.begin(), wanted.end(), c) != wanted.end(); };
  std::map<std::string, Job> jobs;
  auto add = [&](const std::string& name, run::RunConfig c, bool evaluate = true) {
    jobs.emplace(name, Job{name, std::move(c), evaluate});
  };
  if (want(5) || want(6)) add("prop", job_config(s, "prop", s.train_steps, "prop"));
  if (want(6)) {
    add("base", job_config(s, "base", s.train_steps, "base"));
    add("ttrans", job_config(s, "ttrans", s.train_steps, "ttrans"));
  }
  if (want(7)) {
    run::RunConfig c = job_config(s, "noatt", s.noatt_steps, "noatt_clean");
    c.corpus.noise_std = 0.0;
    add("noatt", c);
    jobs.at("noatt").probe_every = 500;
  }
  if (want(8)) {
    add("repeat_a", job_config(s, "prop", s.determinism_steps, "repeat_a"), false);
    add("repeat_b", job_config(s, "prop", s.determinism_steps, "repeat_b"), false);
  }

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::thread> workers;
  for (auto& [name, job] : jobs) workers.emplace_back(run_job, std::ref(job));
  for (auto& w : workers) w.join();
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("  training jobs finished in %.0f s wall\n", wall);

  std::vector<Outcome> out;
  if (want(5)) {
    const Job& j = jobs.at("prop");
    if (!j.error.empty()) {
      out.push_back(failed_job(5, "desk-scale training", j));
    } else {
      const run::SongMetrics& m = j.report->aggregate;
      Outcome o{5, "desk-scale training"};
      o.seconds = j.train_cpu_seconds;
      o.passed = m.monotonicity >= 0.95 && m.timing_mae <= 10.0 && m.f0_rmse_cents <= 50.0 && s.train_steps <= 20000 &&
                 j.train_cpu_seconds <= 1800.0;
      o.detail = "prop after " + std::to_string(s.train_steps) + " steps: monotonicity " + fmt("%.4f", m.monotonicity) +
                 " (>= 0.95), timing MAE " + fmt("%.2f", m.timing_mae) + " frames (<= 10), F0 RMSE " +
                 fmt("%.1f", m.f0_rmse_cents) + " cents (<= 50), training CPU " + fmt("%.0f", j.train_cpu_seconds) +
                 " s (<= 1800)";
      o.metrics = {{"prop_monotonicity", m.monotonicity},
                   {"prop_timing_mae_frames", m.timing_mae},
                   {"prop_f0_rmse_cents", m.f0_rmse_cents},
                   {"prop_feature_loss", m.feature_loss},
                   {"prop_missing_morae", m.missing_morae}};
      out.push_back(o);
    }
  }
  if (want(6)) {
    const Job& p = jobs.at("prop");
    const Job& b = jobs.at("base");
    const Job& t = jobs.at("ttrans");
    for (const Job* j : {&p, &b, &t}) {
      if (!j->error.empty()) out.push_back(failed_job(6, "ablation trend", *j));
    }
    if (p.error.empty() && b.error.empty() && t.error.empty()) {
      const auto& mp = p.report->aggregate;
      const auto& mb = b.report->aggregate;
      const auto& mt = t.report->aggregate;
      const bool mono_gap = mb.monotonicity <= mp.monotonicity - 0.10;
      const bool mae_ratio = mt.timing_mae >= 2.0 * mp.timing_mae;
      Outcome o{6, "ablation trend"};
      o.passed = mono_gap && mae_ratio;
      o.detail = std::string(mono_gap ? "" : "[miss] ") + "base monotonicity " + fmt("%.4f", mb.monotonicity) +
                 " vs prop " + fmt("%.4f", mp.monotonicity) + " (needs <= prop - 0.10); " +
                 (mae_ratio ? "" : "[miss] ") + "ttrans MAE " + fmt("%.2f", mt.timing_mae) + " vs prop " +
                 fmt("%.2f", mp.timing_mae) + " (needs >= 2x); base MAE " + fmt("%.2f", mb.timing_mae) + ", " +
                 fmt("%.1f", mb.missing_morae) + " missing morae per song";
      o.metrics = {{"base_monotonicity", mb.monotonicity},   {"base_timing_mae_frames", mb.timing_mae},
                   {"base_missing_morae", mb.missing_morae}, {"base_f0_rmse_cents", mb.f0_rmse_cents},
                   {"ttrans_monotonicity", mt.monotonicity}, {"ttrans_timing_mae_frames", mt.timing_mae},
                   {"ttrans_f0_rmse_cents", mt.f0_rmse_cents}};
      out.push_back(o);
    }
  }
  if (want(7)) {
    const Job& j = jobs.at("noatt");
    if (!j.error.empty()) {
      out.push_back(failed_job(7, "oracle-alignment floor", j));
    } else {
      // Teacher-forced, dropout off, over all training songs, every 500 steps.
      int first = 0;
      double best = 0.0, last = 0.0;
      for (const auto& [step, value] : j.probes) {
        if (first == 0 && value < 1e-3) first = step;
        best = best == 0.0 ? value : std::min(best, value);
        last = value;
      }
      Outcome o{7, "oracle-alignment floor"};
      o.passed = first > 0 && first <= 5000;
      o.detail = "noatt, noise_std 0: training-set feature loss " + fmt("%.3g", last) + " at step " +
                 std::to_string(s.noatt_steps) + ", best " + fmt("%.3g", best) + ", first below 1e-3 at " +
                 (first > 0 ? "step " + std::to_string(first) : std::string("none")) + " (needs <= 5000); held-out synthesis " +
                 fmt("%.3g", j.report->aggregate.feature_loss);
      o.metrics = {{"noatt_feature_loss_final", last},
                   {"noatt_feature_loss_best", best},
                   {"noatt_first_step_below", static_cast<double>(first)},
                   {"noatt_test_feature_loss", j.report->aggregate.feature_loss}};
      out.push_back(o);
    }
  }
  if (want(8)) {
    const Job& a = jobs.at("repeat_a");
    const Job& b = jobs.at("repeat_b");
    Outcome o{8, "determinism"};
    if (!a.error.empty() || !b.error.empty()) {
      o.detail = "repeat job failed: " + a.error + b.error;
    } else {
      const std::size_t n = static_cast<std::size_t>(s.determinism_steps);
      const bool logs = same_log(a.log, b.log, n);
      run::RunConfig c1 = job_config(s, "prop", 1, "corpus_a");
      run::RunConfig c2 = job_config(s, "prop", 1, "corpus_b");
      c1.data_dir = c1.out_dir;
      c2.data_dir = c2.out_dir;
      const std::uint64_t sum1 = run::generate_data(c1);
      const std::uint64_t sum2 = run::generate_data(c2);
      const std::uint64_t reloaded = synth::corpus_checksum(run::load_data(c1));
      const bool sums = sum1 == sum2 && sum1 == reloaded;
      o.passed = logs && sums;
      o.detail = std::string(logs ? "identical" : "DIFFERENT") + " loss logs over " + std::to_string(n) +
                 " steps; corpus checksums " + synth::checksum_hex(sum1) + " / " + synth::checksum_hex(sum2) +
                 " / reloaded " + synth::checksum_hex(reloaded);
      o.metrics = {{"identical_log_steps", logs ? static_cast<double>(n) : 0.0}};
    }
    out.push_back(o);
  }
  return out;
}

}  // namespace npat::acceptance
