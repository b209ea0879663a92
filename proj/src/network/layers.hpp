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

#include <random>
#include <string>

#include "autodiff/graph.hpp"

namespace npat::net {

using ad::Graph;
using ad::NodeRef;

ad::Tensor glorot(std::size_t out, std::size_t in, std::mt19937_64& rng);

// y = W x + b for a vector x or each row of a matrix x.
struct Dense {
  NodeRef w, b;
  NodeRef operator()(Graph& g, NodeRef x) const { return g.add(g.matvec(w, x), b); }
};
void add_dense(ad::ParamSet& params, const std::string& name, std::size_t out, std::size_t in,
               std::mt19937_64& rng, bool zero = false);
Dense bind_dense(Graph& g, const ad::ParamSet& params, const std::string& name);

// Same-padded convolution over rows followed by a bias.
struct Conv {
  NodeRef w, b;
  std::size_t width = 0;
  NodeRef operator()(Graph& g, NodeRef x) const { return g.add(g.conv1d(x, w, width), b); }
};
void add_conv(ad::ParamSet& params, const std::string& name, std::size_t out, std::size_t in, std::size_t width,
              std::mt19937_64& rng, bool zero = false);
Conv bind_conv(Graph& g, const ad::ParamSet& params, const std::string& name, std::size_t width);

// Gated recurrent cell, gates ordered (update, reset, candidate):
//   z = s(Wz x + Uz h + bz), r = s(Wr x + Ur h + br)
//   n = tanh(Wn x + bn + r * (Un h + cn)), h' = n + z * (h - n)
struct Gru {
  NodeRef w, u, bx, bh;
  std::size_t hidden = 0;
  // W x + bx for a vector, or for every row of a matrix.
  NodeRef project(Graph& g, NodeRef x) const { return g.add(g.matvec(w, x), bx); }
  NodeRef step(Graph& g, NodeRef projected, NodeRef h) const;
  NodeRef operator()(Graph& g, NodeRef x, NodeRef h) const { return step(g, project(g, x), h); }
};
void add_gru(ad::ParamSet& params, const std::string& name, std::size_t hidden, std::size_t in,
             std::mt19937_64& rng);
Gru bind_gru(Graph& g, const ad::ParamSet& params, const std::string& name);

// Row r of an R x C matrix node as a length-C vector.
NodeRef row(Graph& g, NodeRef m, std::size_t r);

}  // namespace npat::net
