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

#include "network/layers.hpp"

#include <cmath>

#include "common/rng.hpp"

namespace npat::net {

using ad::Tensor;

Tensor glorot(std::size_t out, std::size_t in, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Tensor t = Tensor::zeros({out, in});
  for (double& v : t.mutable_data()) v = rng::uniform(rng, -limit, limit);
  return t;
}

void add_dense(ad::ParamSet& params, const std::string& name, std::size_t out, std::size_t in,
               std::mt19937_64& rng, bool zero) {
  params.add(name + ".W", zero ? Tensor::zeros({out, in}) : glorot(out, in, rng));
  params.add(name + ".b", Tensor::zeros({out}));
}

Dense bind_dense(Graph& g, const ad::ParamSet& params, const std::string& name) {
  return {g.param(name + ".W", params), g.param(name + ".b", params)};
}

void add_conv(ad::ParamSet& params, const std::string& name, std::size_t out, std::size_t in, std::size_t width,
              std::mt19937_64& rng, bool zero) {
  // Fan-in counts every tap.
  Tensor w = zero ? Tensor::zeros({out, width * in}) : glorot(out, width * in, rng);
  params.add(name + ".W", std::move(w));
  params.add(name + ".b", Tensor::zeros({out}));
}

Conv bind_conv(Graph& g, const ad::ParamSet& params, const std::string& name, std::size_t width) {
  return {g.param(name + ".W", params), g.param(name + ".b", params), width};
}

void add_gru(ad::ParamSet& params, const std::string& name, std::size_t hidden, std::size_t in,
             std::mt19937_64& rng) {
  params.add(name + ".W", glorot(3 * hidden, in, rng));
  params.add(name + ".U", glorot(3 * hidden, hidden, rng));
  params.add(name + ".bx", Tensor::zeros({3 * hidden}));
  params.add(name + ".bh", Tensor::zeros({3 * hidden}));
}

Gru bind_gru(Graph& g, const ad::ParamSet& params, const std::string& name) {
  Gru gru{g.param(name + ".W", params), g.param(name + ".U", params), g.param(name + ".bx", params),
          g.param(name + ".bh", params), 0};
  gru.hidden = g.value(gru.u).cols();
  return gru;
}

NodeRef Gru::step(Graph& g, NodeRef projected, NodeRef h) const {
  const std::size_t n = hidden;
  NodeRef rec = g.add(g.matvec(u, h), bh);
  NodeRef z = g.sigmoid(g.add(g.slice(projected, 0, n), g.slice(rec, 0, n)));
  NodeRef r = g.sigmoid(g.add(g.slice(projected, n, 2 * n), g.slice(rec, n, 2 * n)));
  NodeRef cand = g.tanh(g.add(g.slice(projected, 2 * n, 3 * n), g.mul(r, g.slice(rec, 2 * n, 3 * n))));
  return g.add(cand, g.mul(z, g.sub(h, cand)));
}

NodeRef row(Graph& g, NodeRef m, std::size_t r) {
  const std::size_t cols = g.value(m).cols();
  return g.reshape(g.slice(m, r, r + 1), {cols});
}

}  // namespace npat::net
