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
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "attention/attention.hpp"
#include "autodiff/graph.hpp"
#include "common/matrix.hpp"
#include "loss/loss.hpp"
#include "network/layers.hpp"
#include "score/score.hpp"

namespace npat::net {

struct ModelConfig {
  std::size_t encoder_dim = 64;  // H, split over the two directions
  std::size_t query_dim = 64;    // Q, attention recurrence
  std::size_t decoder_dim = 64;
  std::size_t prenet1 = 64;
  std::size_t prenet2 = 32;
  std::size_t aux_embed = 16;
  std::size_t encoder_conv_width = 5;
  std::size_t postnet_channels = 32;
  std::size_t postnet_layers = 3;
  std::size_t postnet_width = 5;
  int reduction = 3;
  std::size_t acoustic_dim = 8;
  std::size_t att_hidden = 32;  // A
  std::size_t att_embed = 16;   // E
  std::size_t att_channels = 4;  // C
  std::size_t att_kernel = 15;
  attention::AttentionMode mode;
  bool use_aux = true;          // false feeds zeros through the aux projection
  // Attention replaced by the ground truth: each step weights a phoneme by
  // its share of the step's r frames.
  bool oracle_alignment = false;
  double prenet_dropout = 0.5;
  std::uint64_t seed = 1;

  attention::AttentionDims attention_dims() const;
  bool operator==(const ModelConfig&) const = default;
};

// Throws ConfigError on an unusable configuration.
void validate(const ModelConfig& config);

// Fresh parameters for `config`, drawn from config.seed.
ad::ParamSet init_params(const ModelConfig& config);
// Throws DimensionError naming the first missing or misshapen tensor.
void check_params(const ModelConfig& config, const ad::ParamSet& params);

// Score-derived inputs shared by training and synthesis.
struct SongInputs {
  ad::Tensor phoneme_features;        // N x Fs
  Matrix aux;                         // T x Fa
  std::vector<ad::Tensor> positions;  // per decoder step, N x 3 at frame r*t
  ad::Tensor note_pitch;              // N, log F0
  std::size_t phonemes = 0;
  std::size_t frames = 0;  // T
  std::size_t steps = 0;   // ceil(T / r)
};
SongInputs prepare_inputs(const score::Score& score, const ModelConfig& config);

struct BoundModel {
  Dense enc_proj;
  Conv enc_conv;
  Gru enc_fwd, enc_bwd;
  Dense prenet1, prenet2, aux_proj;
  Gru att_rnn, dec_rnn;
  attention::AttentionParams att;
  Dense out;
  std::vector<Conv> postnet;
};
BoundModel bind(Graph& g, const ModelConfig& config, const ad::ParamSet& params);

// N x H encoder states.
NodeRef encode(Graph& g, const BoundModel& m, const ModelConfig& config, NodeRef features);

struct DecoderState {
  NodeRef att_h, dec_h, context;
  attention::AlignmentState align;
};
DecoderState initial_decoder_state(Graph& g, const ModelConfig& config, std::size_t phonemes);

struct StepOutput {
  NodeRef frames;  // r * D, log F0 channel still a residual
  NodeRef alpha;
  NodeRef log_f0_base;  // sum_n alpha(n) * note_pitch(n), shape {1}
  DecoderState state;
};

struct StepContext {
  const SongInputs* inputs = nullptr;
  const attention::EncoderMemory* memory = nullptr;
  NodeRef note_pitch;
  std::mt19937_64* dropout_rng = nullptr;  // null disables dropout
  const std::vector<int>* oracle_path = nullptr;  // required when config.oracle_alignment
};

StepOutput decode_step(Graph& g, const BoundModel& m, const ModelConfig& config, const StepContext& ctx,
                       const DecoderState& state, NodeRef prev_frames, std::size_t t);

// T' x D residual added to the decoder output.
NodeRef postnet(Graph& g, const BoundModel& m, NodeRef frames);

// Adds sum_n alpha(n) pitch(n) to the log F0 channel of each frame in a group.
double pitch_normalize(const std::vector<double>& alpha, const std::vector<double>& note_pitch, double residual);

struct TrainingExample {
  const score::Score* score = nullptr;
  const Matrix* frames = nullptr;             // T x D, log F0 channel as residual
  const std::vector<double>* log_f0 = nullptr;  // T absolute log F0 targets
  const std::vector<int>* alignment = nullptr;  // frame path; needed for oracle mode
};

struct TeacherOptions {
  double lambda = loss::kDefaultLambda;
  int penalty_decay = loss::kDefaultDecayFrames;
  int penalty_shift = loss::kDefaultShiftFrames;
  std::mt19937_64* dropout_rng = nullptr;
  // Previous-frame input for each step; defaults to the targets.
  const Matrix* feedback = nullptr;
};

struct TeacherResult {
  NodeRef decoder_out;  // T' x D, absolute log F0
  NodeRef postnet_out;
  std::vector<NodeRef> alignment;  // Tdec columns
  loss::LossNodes loss;
  loss::LossReport report;
};

// Teacher-forced pass over one song; targets are padded to a multiple of r by
// repeating the last frame.
TeacherResult forward_teacher(Graph& g, const ModelConfig& config, const ad::ParamSet& params,
                              const TrainingExample& example, const TeacherOptions& options = {});

struct Synthesis {
  Matrix frames;     // T x D, absolute log F0 channel
  Matrix residual_frames;  // T x D as fed back to the decoder
  Matrix alignment;  // N x Tdec
  std::vector<double> log_f0;
  std::vector<double> note_log_f0;  // attention-weighted note pitch per frame
};

// Autoregressive decoding for ceil(T / r) steps. Oracle mode needs the path.
Synthesis synthesize(const ModelConfig& config, const ad::ParamSet& params, const score::Score& score,
                     const std::vector<int>* oracle_path = nullptr);

}  // namespace npat::net
