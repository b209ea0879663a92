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

#include <optional>
#include <random>
#include <string>

#include "autodiff/graph.hpp"

namespace npat::attention {

using ad::Graph;
using ad::NodeRef;

enum class Transition {
  kFull,         // u from query, key, note position and location features
  kFixedHalf,    // u = 0.5 everywhere
  kPhonemeOnly,  // u from the encoder state only; constant over time
  kTimeOnly,     // u from the query only; shared by every phoneme
};

struct AttentionMode {
  bool use_position = true;
  Transition transition = Transition::kFull;
  bool operator==(const AttentionMode&) const = default;
};

const char* transition_name(Transition t);

struct AttentionDims {
  std::size_t query = 64;     // Q
  std::size_t encoder = 64;   // H
  std::size_t hidden = 32;    // A
  std::size_t embed = 16;     // E
  std::size_t channels = 4;   // C
  std::size_t kernel_width = 15;
};

// Registers W/V/U/b/v for the output head, the same plus T for the transition
// head, the position embedding and the location kernel under `prefix`.
void init_params(ad::ParamSet& params, const AttentionDims& dims, std::mt19937_64& rng,
                 const std::string& prefix = "att.");

struct AttentionParams {
  NodeRef w_e, v_e, u_e, b_e, out_e;
  NodeRef w_u, v_u, u_u, t_u, b_u, out_u;
  NodeRef pos_m, pos_b;
  NodeRef loc_k;
  std::size_t kernel_width = 0;

  static AttentionParams bind(Graph& g, const ad::ParamSet& params, std::size_t kernel_width,
                              const std::string& prefix = "att.");
};

// Per-utterance quantities that do not depend on the decoder step.
struct EncoderMemory {
  NodeRef states;       // X, N x H
  NodeRef states_t;     // X^T, H x N
  NodeRef keys_e;       // rows V_e x_n
  NodeRef keys_u;       // rows V_u x_n
  std::optional<NodeRef> static_u;  // phoneme-only transition, computed once
  std::size_t length = 0;
};

EncoderMemory prepare_memory(Graph& g, const AttentionParams& p, NodeRef states,
                             const AttentionMode& mode);

struct AlignmentState {
  NodeRef alpha;       // alpha_{t-1}
  NodeRef cumulative;  // sum of alpha_1..alpha_{t-1}
  std::optional<NodeRef> prev_u;  // u_{t-1}; empty before the first step
};

// One-hot on the first phoneme, zero cumulative alignment.
AlignmentState initial_state(Graph& g, std::size_t length);

// tanh(M_p [p1 p2 p3] + b_p); triples is N x 3 (or a single 3-vector).
NodeRef embed_position(Graph& g, const AttentionParams& p, NodeRef triples);

// y_t: softmax over phonemes of v_e^T tanh(W_e q + V_e x_n + U_e p_n + b_e).
// `positions` (N x E) is ignored unless mode.use_position.
NodeRef output_probability(Graph& g, const AttentionParams& p, NodeRef query,
                           const EncoderMemory& memory, std::optional<NodeRef> positions,
                           const AttentionMode& mode);

// Same-padded convolution of the cumulative alignment: N x C.
NodeRef location_features(Graph& g, const AttentionParams& p, NodeRef cumulative);

// u_t per the transition mode.
NodeRef transition_probability(Graph& g, const AttentionParams& p, NodeRef query,
                               const EncoderMemory& memory, std::optional<NodeRef> positions,
                               std::optional<NodeRef> location, const AttentionMode& mode);

inline constexpr double kNormalizerEps = 1e-8;

struct StepResult {
  NodeRef alpha;
  AlignmentState state;
};

// alpha'_t(n) = ((1 - u(n)) alpha(n) + u(n-1) alpha(n-1)) y_t(n), with u the
// previous step's transition (u_now when none is stored yet), then
// normalised. Throws AlignmentCollapse if alpha' is identically zero.
StepResult forward_step(Graph& g, const AlignmentState& state, NodeRef y, NodeRef u_now);

// c_t = sum_n alpha_t(n) x_n.
NodeRef context(Graph& g, NodeRef alpha, const EncoderMemory& memory);

struct AttendResult {
  NodeRef alpha;
  NodeRef context;
  NodeRef y;
  NodeRef u;
  AlignmentState state;
};

// One decoder step. `triples` holds the normalized note positions (N x 3) of
// the step's first frame; it may be empty when mode.use_position is false.
AttendResult attend(Graph& g, const AttentionParams& p, const AttentionMode& mode, NodeRef query,
                    const EncoderMemory& memory, std::optional<NodeRef> triples,
                    const AlignmentState& state);

}  // namespace npat::attention
