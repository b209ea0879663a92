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

#include "network/trainer.hpp"

#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace npat::net {

double global_norm(const ad::GradMap& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) {
    for (double v : g.data()) sq += v * v;
  }
  return std::sqrt(sq);
}

double Adam::step(ad::ParamSet& params, const ad::GradMap& grads) {
  const double norm = global_norm(grads);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  const double scale = options_.clip > 0.0 && norm > options_.clip ? options_.clip / norm : 1.0;
  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) throw InvalidArgument("gradient for unknown parameter '" + name + "'");
    ad::Tensor& p = params.mutable_at(name);
    if (p.size() != g.size()) throw DimensionError("gradient for '" + name + "' has the wrong size");
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.empty()) {
      m.assign(p.size(), 0.0);
      v.assign(p.size(), 0.0);
    }
    auto data = p.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double gi = g[i] * scale;
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * gi;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * gi * gi;
      data[i] -= options_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + options_.eps);
    }
  }
  return norm;
}

std::vector<std::size_t> batch_indices(std::size_t songs, int batch, int step, std::uint64_t seed) {
  if (songs == 0) throw InvalidArgument("no training songs");
  if (batch < 1) throw InvalidArgument("batch must be >= 1");
  std::vector<std::size_t> out;
  std::vector<std::size_t> perm;
  long long epoch = -1;
  for (long long k = static_cast<long long>(step) * batch; k < static_cast<long long>(step + 1) * batch; ++k) {
    const long long e = k / static_cast<long long>(songs);
    if (e != epoch) {
      epoch = e;
      std::mt19937_64 g(rng::mix(seed, 0x65706f6368ULL + static_cast<std::uint64_t>(e)));
      perm.resize(songs);
      for (std::size_t i = 0; i < songs; ++i) perm[i] = i;
      for (std::size_t i = songs; i-- > 1;) {
        std::swap(perm[i], perm[static_cast<std::size_t>(rng::uniform_int(g, 0, static_cast<long long>(i)))]);
      }
    }
    out.push_back(perm[static_cast<std::size_t>(k % static_cast<long long>(songs))]);
  }
  return out;
}

SongGradient song_gradient(const ModelConfig& config, const ad::ParamSet& params, const TrainingExample& example,
                           const TeacherOptions& options, std::uint64_t dropout_seed) {
  std::mt19937_64 drop(dropout_seed);
  ad::Graph g;
  TeacherOptions opts = options;
  opts.dropout_rng = &drop;
  TeacherResult r = forward_teacher(g, config, params, example, opts);
  if (!std::isfinite(r.report.total)) throw NumericError("non-finite loss");
  g.backward(r.loss.total);
  return {r.report, g.param_gradients(params)};
}

std::vector<StepLog> train(const ModelConfig& config, ad::ParamSet& params,
                           const std::vector<TrainingExample>& examples, const TrainOptions& options, Adam& adam,
                           const StepCallback& on_step) {
  if (options.steps < 0) throw InvalidArgument("steps must be >= 0");
  std::vector<StepLog> log;
  TeacherOptions teacher;
  teacher.lambda = options.lambda;
  teacher.penalty_decay = options.penalty_decay;
  teacher.penalty_shift = options.penalty_shift;
  for (int s = 0; s < options.steps; ++s) {
    const int step = options.first_step + s;
    const auto idx = batch_indices(examples.size(), options.batch, step, options.seed);
    ad::GradMap total;
    StepLog entry;
    entry.step = step + 1;
    entry.report.lambda = options.lambda;
    for (std::size_t song : idx) {
      const std::uint64_t dseed = rng::mix(rng::mix(options.seed, static_cast<std::uint64_t>(step)), song);
      SongGradient sg = song_gradient(config, params, examples[song], teacher, dseed);
      entry.report.feat_decoder += sg.report.feat_decoder;
      entry.report.feat_postnet += sg.report.feat_postnet;
      entry.report.guided += sg.report.guided;
      entry.report.total += sg.report.total;
      if (total.empty()) {
        total = std::move(sg.grads);
      } else {
        for (auto& [name, g] : total) {
          auto dst = g.mutable_data();
          const auto& src = sg.grads.at(name).data();
          for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        }
      }
    }
    const double inv = 1.0 / static_cast<double>(idx.size());
    for (auto& [name, g] : total) {
      for (double& v : g.mutable_data()) v *= inv;
    }
    entry.report.feat_decoder *= inv;
    entry.report.feat_postnet *= inv;
    entry.report.guided *= inv;
    entry.report.total *= inv;
    entry.grad_norm = adam.step(params, total);
    log.push_back(entry);
    if (on_step) on_step(entry, params);
  }
  return log;
}

}  // namespace npat::net
