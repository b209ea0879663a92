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

#include "loss/loss.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace npat::loss {

double band_penalty(int lo, int hi, long long f, int decay) {
  long long dist = 0;
  if (f < lo) {
    dist = lo - f;
  } else if (f >= hi) {
    dist = f - (static_cast<long long>(hi) - 1);
  }
  return std::min(1.0, static_cast<double>(dist) / static_cast<double>(decay));
}

PenaltyMatrix penalty_matrix(const score::Score& score, int reduction, int decay, int shift) {
  if (reduction < 1) throw InvalidArgument("reduction factor must be >= 1");
  if (decay <= 0) throw InvalidArgument("penalty decay must be positive");
  if (shift < 0) throw InvalidArgument("penalty shift must be non-negative");
  const auto spans = score::mora_boundaries(score);
  const std::size_t n = spans.back().end_entry;
  const int total = score.total_frames();
  const std::size_t steps = static_cast<std::size_t>((total + reduction - 1) / reduction);

  PenaltyMatrix out;
  out.decay_frames = decay;
  out.shift_frames = shift;
  out.g = Matrix(n, steps);
  for (const score::MoraSpan& span : spans) {
    const int lo = span.start_frame - shift;
    // The final band keeps its end at T so the tail of the song stays covered.
    const int hi = span.end_frame == total ? total : span.end_frame - shift;
    for (std::size_t t = 0; t < steps; ++t) {
      const double v = band_penalty(lo, hi, static_cast<long long>(t) * reduction, decay);
      for (std::size_t e = span.first_entry; e < span.end_entry; ++e) out.g(e, t) = v;
    }
  }
  return out;
}

namespace {

void require_same(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw DimensionError(std::string(what) + ": " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                         " vs " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
  }
}

}  // namespace

double guided_attention_loss(const Matrix& g, const Matrix& a) {
  require_same(g, a, "guided attention loss");
  if (g.data.empty()) throw InvalidArgument("guided attention loss over an empty matrix");
  double sum = 0.0;
  for (std::size_t i = 0; i < g.data.size(); ++i) sum += std::abs(g.data[i] * a.data[i]);
  return sum / static_cast<double>(g.data.size());
}

NodeRef guided_attention_loss(Graph& graph, const Matrix& g, const std::vector<NodeRef>& columns) {
  if (columns.size() != g.cols) {
    throw DimensionError("guided attention loss: " + std::to_string(columns.size()) + " alignment columns vs " +
                         std::to_string(g.cols) + " penalty columns");
  }
  if (g.data.empty()) throw InvalidArgument("guided attention loss over an empty matrix");
  std::vector<double> flat(g.data.size());
  for (std::size_t t = 0; t < g.cols; ++t) {
    for (std::size_t n = 0; n < g.rows; ++n) flat[t * g.rows + n] = g(n, t);
  }
  NodeRef a = graph.concat(columns);
  if (graph.value(a).size() != flat.size()) {
    throw DimensionError("guided attention loss: alignment columns do not have " + std::to_string(g.rows) +
                         " rows");
  }
  NodeRef weighted = graph.mul(a, graph.input(ad::Tensor::vector(std::move(flat))));
  return graph.scale(graph.sum(weighted), 1.0 / static_cast<double>(g.data.size()));
}

double feature_loss(const Matrix& o, const Matrix& o_hat) {
  require_same(o, o_hat, "feature loss");
  if (o.data.empty()) throw InvalidArgument("feature loss over an empty matrix");
  double sum = 0.0;
  for (std::size_t i = 0; i < o.data.size(); ++i) {
    const double d = o.data[i] - o_hat.data[i];
    sum += d * d;
  }
  return sum / static_cast<double>(o.data.size());
}

NodeRef feature_loss(Graph& graph, NodeRef o_hat, const ad::Tensor& o) {
  if (graph.value(o_hat).dims() != o.dims()) {
    throw DimensionError("feature loss: prediction " + ad::dims_to_string(graph.value(o_hat).dims()) +
                         " vs target " + ad::dims_to_string(o.dims()));
  }
  NodeRef diff = graph.sub(o_hat, graph.input(o));
  return graph.scale(graph.squared_norm(diff), 1.0 / static_cast<double>(o.size()));
}

LossReport total_loss(const Matrix& o, const Matrix& o_dec, const Matrix& o_post, const Matrix& g,
                      const Matrix& a, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  LossReport r;
  r.lambda = lambda;
  r.feat_decoder = feature_loss(o, o_dec);
  r.feat_postnet = feature_loss(o, o_post);
  r.guided = guided_attention_loss(g, a);
  r.total = r.feat_decoder + r.feat_postnet + lambda * r.guided;
  return r;
}

LossNodes total_loss(Graph& graph, const ad::Tensor& o, NodeRef o_dec, NodeRef o_post, const Matrix& g,
                     const std::vector<NodeRef>& columns, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  LossNodes n;
  n.feat_decoder = feature_loss(graph, o_dec, o);
  n.feat_postnet = feature_loss(graph, o_post, o);
  n.guided = guided_attention_loss(graph, g, columns);
  NodeRef feat = graph.add(n.feat_decoder, n.feat_postnet);
  n.total = lambda == 0.0 ? feat : graph.add(feat, graph.scale(n.guided, lambda));
  return n;
}

LossReport report(const Graph& graph, const LossNodes& nodes, double lambda) {
  LossReport r;
  r.lambda = lambda;
  r.feat_decoder = graph.value(nodes.feat_decoder).item();
  r.feat_postnet = graph.value(nodes.feat_postnet).item();
  r.guided = graph.value(nodes.guided).item();
  r.total = graph.value(nodes.total).item();
  return r;
}

ad::Tensor to_tensor(const Matrix& m) { return ad::Tensor::matrix(m.rows, m.cols, m.data); }

Matrix to_matrix(const ad::Tensor& t) {
  Matrix m(t.rows(), t.cols());
  std::copy(t.data().begin(), t.data().end(), m.data.begin());
  return m;
}

}  // namespace npat::loss
