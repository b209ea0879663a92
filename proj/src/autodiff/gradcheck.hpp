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
#include <string>

#include "autodiff/graph.hpp"

namespace npat::ad {

// Builds a scalar loss from the given parameters into a fresh graph.
using LossBuilder = std::function<NodeRef(Graph&, const ParamSet&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates_checked = 0;
};

struct GradCheckOptions {
  double eps = 1e-5;
  // 0 checks every coordinate; otherwise a seeded sample of this many per tensor.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
  // Keeps near-zero coordinates from turning round-off into large relative errors.
  double floor = 1e-8;
};

// Central differences against the reverse pass. Relative error per coordinate
// is |a - n| / max(|a|, |n|, floor). Throws InvalidArgument when eps is outside
// (0, 1e-2] or when two builds at the same point disagree.
GradCheckResult finite_diff_check(const LossBuilder& build, const ParamSet& params,
                                  const GradCheckOptions& options = {});

double finite_diff_check(const LossBuilder& build, const ParamSet& params, double eps);

}  // namespace npat::ad
