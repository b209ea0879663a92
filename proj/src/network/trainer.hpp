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
#include <map>
#include <vector>

#include "network/model.hpp"

namespace npat::net {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip = 1.0;  // global gradient-norm clip; 0 disables
};

class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}
  // Applies one update; returns the gradient norm before clipping.
  double step(ad::ParamSet& params, const ad::GradMap& grads);
  std::size_t steps() const { return t_; }

 private:
  AdamOptions options_;
  std::map<std::string, std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

double global_norm(const ad::GradMap& grads);

struct TrainOptions {
  int steps = 1000;
  int batch = 1;
  double lambda = loss::kDefaultLambda;
  int penalty_decay = loss::kDefaultDecayFrames;
  int penalty_shift = loss::kDefaultShiftFrames;
  AdamOptions adam;
  std::uint64_t seed = 1;
  int first_step = 0;
};

struct StepLog {
  int step = 0;
  loss::LossReport report;  // mean over the batch
  double grad_norm = 0.0;
};

// Song indices for a step: consecutive slices of per-epoch permutations.
std::vector<std::size_t> batch_indices(std::size_t songs, int batch, int step, std::uint64_t seed);

// Loss and summed gradients of one song (dropout seeded by step and song).
struct SongGradient {
  loss::LossReport report;
  ad::GradMap grads;
};
// `options` supplies lambda and the penalty shape; its dropout_rng is ignored.
SongGradient song_gradient(const ModelConfig& config, const ad::ParamSet& params, const TrainingExample& example,
                           const TeacherOptions& options, std::uint64_t dropout_seed);

using StepCallback = std::function<void(const StepLog&, const ad::ParamSet&)>;

// Deterministic: gradients are reduced in batch order.
std::vector<StepLog> train(const ModelConfig& config, ad::ParamSet& params,
                           const std::vector<TrainingExample>& examples, const TrainOptions& options, Adam& adam,
                           const StepCallback& on_step = {});

}  // namespace npat::net
