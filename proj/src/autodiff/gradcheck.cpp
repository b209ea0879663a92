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

#include "autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "common/error.hpp"

namespace npat::ad {

namespace {

double loss_at(const LossBuilder& build, const ParamSet& params) {
  Graph g;
  NodeRef loss = build(g, params);
  return g.value(loss).item();
}

}  // namespace

GradCheckResult finite_diff_check(const LossBuilder& build, const ParamSet& params,
                                  const GradCheckOptions& options) {
  if (!(options.eps > 0.0 && options.eps <= 1e-2)) {
    throw InvalidArgument("finite_diff_check: eps must lie in (0, 1e-2]");
  }
  Graph graph;
  NodeRef loss = build(graph, params);
  const double base = graph.value(loss).item();
  if (loss_at(build, params) != base) {
    throw InvalidArgument("finite_diff_check: loss builder is not deterministic");
  }
  const GradMap analytic = gradients(graph, loss, params);

  GradCheckResult result;
  std::mt19937_64 rng(options.seed);
  ParamSet probe = params;
  for (const auto& [name, tensor] : params) {
    std::vector<std::size_t> coords(tensor.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_param != 0 && coords.size() > options.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
    }
    const Tensor& grad = analytic.at(name);
    for (std::size_t idx : coords) {
      auto slot = probe.mutable_at(name).mutable_data();
      const double orig = slot[idx];
      slot[idx] = orig + options.eps;
      const double plus = loss_at(build, probe);
      probe.mutable_at(name).mutable_data()[idx] = orig - options.eps;
      const double minus = loss_at(build, probe);
      probe.mutable_at(name).mutable_data()[idx] = orig;

      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double a = grad[idx];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.coordinates_checked;
      if (result.worst_param.empty() || rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = name;
        result.worst_index = idx;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

double finite_diff_check(const LossBuilder& build, const ParamSet& params, double eps) {
  GradCheckOptions options;
  options.eps = eps;
  return finite_diff_check(build, params, options).max_rel_error;
}

}  // namespace npat::ad
