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

#include "attention/attention.hpp"

#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace npat::attention {

using ad::Tensor;

const char* transition_name(Transition t) {
  switch (t) {
    case Transition::kFull: return "full";
    case Transition::kFixedHalf: return "fixed_half";
    case Transition::kPhonemeOnly: return "phoneme_only";
    case Transition::kTimeOnly: return "time_only";
  }
  return "?";
}

namespace {

Tensor uniform(ad::Dims dims, double limit, std::mt19937_64& rng) {
  Tensor t = Tensor::zeros(std::move(dims));
  for (double& v : t.mutable_data()) v = rng::uniform(rng, -limit, limit);
  return t;
}

Tensor glorot(std::size_t out, std::size_t in, std::mt19937_64& rng) {
  return uniform({out, in}, std::sqrt(6.0 / static_cast<double>(in + out)), rng);
}

}  // namespace

void init_params(ad::ParamSet& params, const AttentionDims& d, std::mt19937_64& rng,
                 const std::string& prefix) {
  for (const char* head : {"e.", "u."}) {
    const std::string h = prefix + head;
    params.add(h + "W", glorot(d.hidden, d.query, rng));
    params.add(h + "V", glorot(d.hidden, d.encoder, rng));
    params.add(h + "U", glorot(d.hidden, d.embed, rng));
    params.add(h + "b", Tensor::zeros({d.hidden}));
    params.add(h + "v", uniform({d.hidden}, 1.0 / std::sqrt(static_cast<double>(d.hidden)), rng));
  }
  params.add(prefix + "u.T", glorot(d.hidden, d.channels, rng));
  params.add(prefix + "pos.M", glorot(d.embed, 3, rng));
  params.add(prefix + "pos.b", Tensor::zeros({d.embed}));
  params.add(prefix + "loc.K", uniform({d.channels, d.kernel_width}, 0.1, rng));
}

AttentionParams AttentionParams::bind(Graph& g, const ad::ParamSet& params,
                                      std::size_t kernel_width, const std::string& prefix) {
  AttentionParams p;
  auto get = [&](const std::string& name) { return g.param(prefix + name, params); };
  p.w_e = get("e.W");
  p.v_e = get("e.V");
  p.u_e = get("e.U");
  p.b_e = get("e.b");
  p.out_e = get("e.v");
  p.w_u = get("u.W");
  p.v_u = get("u.V");
  p.u_u = get("u.U");
  p.t_u = get("u.T");
  p.b_u = get("u.b");
  p.out_u = get("u.v");
  p.pos_m = get("pos.M");
  p.pos_b = get("pos.b");
  p.loc_k = get("loc.K");
  p.kernel_width = kernel_width;
  const ad::Dims& k = g.value(p.loc_k).dims();
  if (k[1] != kernel_width) {
    throw DimensionError("location kernel is " + ad::dims_to_string(k) + ", expected width " +
                         std::to_string(kernel_width));
  }
  return p;
}

EncoderMemory prepare_memory(Graph& g, const AttentionParams& p, NodeRef states,
                             const AttentionMode& mode) {
  const Tensor& x = g.value(states);
  if (x.rank() != 2) throw DimensionError("encoder states must be N x H, got " + ad::dims_to_string(x.dims()));
  EncoderMemory m;
  m.states = states;
  m.length = x.rows();
  m.states_t = g.transpose(states);
  m.keys_e = g.matvec(p.v_e, states);
  m.keys_u = g.matvec(p.v_u, states);
  if (mode.transition == Transition::kPhonemeOnly) {
    NodeRef hidden = g.tanh(g.add(m.keys_u, p.b_u));
    m.static_u = g.sigmoid(g.matvec(hidden, p.out_u));
  }
  return m;
}

AlignmentState initial_state(Graph& g, std::size_t length) {
  if (length == 0) throw InvalidArgument("alignment over zero phonemes");
  Tensor alpha = Tensor::zeros({length});
  alpha.mutable_data()[0] = 1.0;
  return {g.input(std::move(alpha)), g.input(Tensor::zeros({length})), std::nullopt};
}

NodeRef embed_position(Graph& g, const AttentionParams& p, NodeRef triples) {
  return g.tanh(g.add(g.matvec(p.pos_m, triples), p.pos_b));
}

NodeRef output_probability(Graph& g, const AttentionParams& p, NodeRef query,
                           const EncoderMemory& memory, std::optional<NodeRef> positions,
                           const AttentionMode& mode) {
  if (memory.length == 0) throw InvalidArgument("output_probability over zero phonemes");
  NodeRef pre = g.add(memory.keys_e, g.add(g.matvec(p.w_e, query), p.b_e));
  if (mode.use_position) {
    if (!positions) throw InvalidArgument("position-aware mode needs note positions");
    pre = g.add(pre, g.matvec(p.u_e, *positions));
  }
  return g.softmax(g.matvec(g.tanh(pre), p.out_e));
}

NodeRef location_features(Graph& g, const AttentionParams& p, NodeRef cumulative) {
  const std::size_t n = g.value(cumulative).size();
  return g.conv1d(g.reshape(cumulative, {n, 1}), p.loc_k, p.kernel_width);
}

NodeRef transition_probability(Graph& g, const AttentionParams& p, NodeRef query,
                               const EncoderMemory& memory, std::optional<NodeRef> positions,
                               std::optional<NodeRef> location, const AttentionMode& mode) {
  const std::size_t n = memory.length;
  switch (mode.transition) {
    case Transition::kFixedHalf:
      return g.input(Tensor::filled({n}, 0.5));
    case Transition::kPhonemeOnly:
      if (memory.static_u) return *memory.static_u;
      return g.sigmoid(g.matvec(g.tanh(g.add(memory.keys_u, p.b_u)), p.out_u));
    case Transition::kTimeOnly: {
      NodeRef hidden = g.tanh(g.add(g.matvec(p.w_u, query), p.b_u));
      NodeRef shared = g.sigmoid(g.sum(g.mul(hidden, p.out_u)));
      return g.matvec(g.input(Tensor::filled({n, 1}, 1.0)), shared);
    }
    case Transition::kFull: {
      NodeRef pre = g.add(memory.keys_u, g.add(g.matvec(p.w_u, query), p.b_u));
      if (mode.use_position) {
        if (!positions) throw InvalidArgument("position-aware mode needs note positions");
        pre = g.add(pre, g.matvec(p.u_u, *positions));
      }
      if (!location) throw InvalidArgument("full transition needs location features");
      pre = g.add(pre, g.matvec(p.t_u, *location));
      return g.sigmoid(g.matvec(g.tanh(pre), p.out_u));
    }
  }
  throw InvalidArgument("unknown transition mode");
}

StepResult forward_step(Graph& g, const AlignmentState& state, NodeRef y, NodeRef u_now) {
  const std::size_t n = g.value(state.alpha).size();
  if (g.value(y).size() != n || g.value(u_now).size() != n) {
    throw DimensionError("forward_step: alpha, y and u must all have " + std::to_string(n) + " entries");
  }
  const NodeRef u = state.prev_u.value_or(u_now);
  NodeRef moved = g.mul(u, state.alpha);
  NodeRef arriving = n == 1 ? g.input(Tensor::zeros({1}))
                            : g.concat({g.input(Tensor::zeros({1})), g.slice(moved, 0, n - 1)});
  NodeRef unnormalized = g.mul(g.add(g.sub(state.alpha, moved), arriving), y);

  double mass = 0.0;
  for (double v : g.value(unnormalized).data()) mass += v;
  if (mass <= 0.0) {
    throw AlignmentCollapse("alignment collapsed: output probability has no overlap with the previous alignment");
  }
  NodeRef alpha = g.normalize(unnormalized, kNormalizerEps);
  return {alpha, AlignmentState{alpha, g.add(state.cumulative, alpha), u_now}};
}

NodeRef context(Graph& g, NodeRef alpha, const EncoderMemory& memory) {
  return g.matvec(memory.states_t, alpha);
}

AttendResult attend(Graph& g, const AttentionParams& p, const AttentionMode& mode, NodeRef query,
                    const EncoderMemory& memory, std::optional<NodeRef> triples,
                    const AlignmentState& state) {
  std::optional<NodeRef> positions;
  if (mode.use_position) {
    if (!triples) throw InvalidArgument("position-aware mode needs note position triples");
    positions = embed_position(g, p, *triples);
  }
  NodeRef y = output_probability(g, p, query, memory, positions, mode);
  std::optional<NodeRef> location;
  if (mode.transition == Transition::kFull) location = location_features(g, p, state.cumulative);
  NodeRef u = transition_probability(g, p, query, memory, positions, location, mode);
  StepResult step = forward_step(g, state, y, u);
  return {step.alpha, context(g, step.alpha, memory), y, u, step.state};
}

}  // namespace npat::attention
