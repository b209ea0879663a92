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

#include <vector>

#include "autodiff/graph.hpp"
#include "common/matrix.hpp"
#include "score/score.hpp"

namespace npat::loss {

using ad::Graph;
using ad::NodeRef;

inline constexpr int kDefaultDecayFrames = 60;
inline constexpr int kDefaultShiftFrames = 15;
inline constexpr double kDefaultLambda = 10.0;

struct PenaltyMatrix {
  Matrix g;  // N x Tdec
  int decay_frames = kDefaultDecayFrames;
  int shift_frames = kDefaultShiftFrames;
};

// Penalty for frame f against the allowed band [lo, hi): 0 inside, otherwise
// the distance to the nearest band frame over decay, clamped to 1.
double band_penalty(int lo, int hi, long long f, int decay);

// Bands come from equal division of each note into morae, translated `shift`
// frames earlier; the last band still ends at T. Column t samples frame r * t; Tdec = ceil(T / r).
PenaltyMatrix penalty_matrix(const score::Score& score, int reduction, int decay = kDefaultDecayFrames,
                             int shift = kDefaultShiftFrames);

// Mean of G .* A over all entries.
double guided_attention_loss(const Matrix& g, const Matrix& a);
// Same, with A given as its columns (one N-vector node per decoder step).
NodeRef guided_attention_loss(Graph& graph, const Matrix& g, const std::vector<NodeRef>& columns);

// Sum over frames of squared distance, divided by T * D.
double feature_loss(const Matrix& o, const Matrix& o_hat);
NodeRef feature_loss(Graph& graph, NodeRef o_hat, const ad::Tensor& o);

struct LossReport {
  double feat_decoder = 0.0;
  double feat_postnet = 0.0;
  double guided = 0.0;
  double total = 0.0;
  double lambda = kDefaultLambda;
};

LossReport total_loss(const Matrix& o, const Matrix& o_dec, const Matrix& o_post, const Matrix& g,
                      const Matrix& a, double lambda = kDefaultLambda);

struct LossNodes {
  NodeRef feat_decoder, feat_postnet, guided, total;
};

LossNodes total_loss(Graph& graph, const ad::Tensor& o, NodeRef o_dec, NodeRef o_post, const Matrix& g,
                     const std::vector<NodeRef>& columns, double lambda = kDefaultLambda);
LossReport report(const Graph& graph, const LossNodes& nodes, double lambda);

ad::Tensor to_tensor(const Matrix& m);
Matrix to_matrix(const ad::Tensor& t);

}  // namespace npat::loss
