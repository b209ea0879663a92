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

#include <algorithm>
#include <cmath>
#include <random>

#include "attention/attention.hpp"
#include "autodiff/gradcheck.hpp"
#include "common/error.hpp"
#include "doctest.h"

using namespace npat;
using namespace npat::attention;
using ad::ParamSet;
using ad::Tensor;

namespace {

AttentionDims small_dims() {
  AttentionDims d;
  d.query = 5;
  d.encoder = 4;
  d.hidden = 6;
  d.embed = 3;
  d.channels = 2;
  d.kernel_width = 3;
  return d;
}

Tensor random_tensor(ad::Dims dims, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t = Tensor::zeros(std::move(dims));
  for (double& v : t.mutable_data()) v = u(rng);
  return t;
}

ParamSet zero_params(const AttentionDims& d) {
  std::mt19937_64 rng(0);
  ParamSet p;
  init_params(p, d, rng);
  for (const auto& name : p.names()) p.set(name, Tensor::zeros(p.at(name).dims()));
  return p;
}

// Scalar-agent forward attention written directly against plain arrays.
std::vector<double> scalar_agent_step(const std::vector<double>& prev, double u,
                                      const std::vector<double>& y) {
  std::vector<double> next(prev.size());
  double total = 0.0;
  for (std::size_t n = 0; n < prev.size(); ++n) {
    const double stay = (1.0 - u) * prev[n];
    const double advance = n == 0 ? 0.0 : u * prev[n - 1];
    next[n] = (stay + advance) * y[n];
    total += next[n];
  }
  for (double& v : next) v /= total + 1e-8;
  return next;
}

struct Fixture {
  AttentionDims dims = small_dims();
  ParamSet params;
  Tensor states, query;
  std::vector<Tensor> triples;
  std::size_t n = 7;

  explicit Fixture(std::uint64_t seed, std::size_t steps = 4) {
    std::mt19937_64 rng(seed);
    init_params(params, dims, rng);
    states = random_tensor({n, dims.encoder}, rng);
    query = random_tensor({dims.query}, rng);
    for (std::size_t t = 0; t < steps; ++t) triples.push_back(random_tensor({n, 3}, rng, -2.0, 2.0));
  }
};

}  // namespace

TEST_CASE("embed_position") {
  AttentionDims d = small_dims();
  ParamSet zero = zero_params(d);
  ad::Graph g;
  AttentionParams p = AttentionParams::bind(g, zero, d.kernel_width);
  NodeRef tri = g.input(Tensor::matrix(2, 3, {0.2, 0.3, 0.0, -1.0, 2.0, 1.0}));
  CHECK(g.value(embed_position(g, p, tri)) == Tensor::zeros({2, d.embed}));

  Fixture f(1);
  ad::Graph g2;
  AttentionParams p2 = AttentionParams::bind(g2, f.params, d.kernel_width);
  NodeRef big = g2.input(Tensor::matrix(1, 3, {0.0, 1.0, 0.0}));
  Tensor a = g2.value(embed_position(g2, p2, big));
  Tensor b = g2.value(embed_position(g2, p2, big));
  CHECK(a == b);
  NodeRef tri2 = g2.input(f.triples[0]);
  for (double v : g2.value(embed_position(g2, p2, tri2)).data()) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("output_probability") {
  AttentionDims d = small_dims();
  AttentionMode mode;
  {
    ParamSet zero = zero_params(d);
    ad::Graph g;
    AttentionParams p = AttentionParams::bind(g, zero, d.kernel_width);
    EncoderMemory mem = prepare_memory(g, p, g.input(Tensor::zeros({5, d.encoder})), mode);
    NodeRef pos = g.input(Tensor::zeros({5, d.embed}));
    Tensor y = g.value(output_probability(g, p, g.input(Tensor::zeros({d.query})), mem, pos, mode));
    for (double v : y.data()) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
  }
  {
    // Hand-set logits (0, ln 3): A = 1, v_e = 2, tanh(V x_2) = ln(3)/2.
    AttentionDims one = d;
    one.hidden = 1;
    one.encoder = 1;
    ParamSet p0 = zero_params(one);
    p0.set("att.e.v", Tensor::vector({2.0}));
    p0.set("att.e.V", Tensor::matrix(1, 1, {std::atanh(std::log(3.0) / 2.0)}));
    ad::Graph g;
    AttentionParams p = AttentionParams::bind(g, p0, one.kernel_width);
    EncoderMemory mem = prepare_memory(g, p, g.input(Tensor::matrix(2, 1, {0.0, 1.0})), mode);
    AttentionMode plain{false, Transition::kFull};
    Tensor y = g.value(output_probability(g, p, g.input(Tensor::zeros({one.query})), mem, std::nullopt, plain));
    CHECK(y[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(0.75).epsilon(1e-12));
  }
  {
    // Shifting every logit by a constant via b_e with a one-hot v_e and
    // linear-range tanh is not possible, so check the softmax stage directly.
    ad::Graph g;
    Tensor logits = Tensor::vector({0.3, -1.2, 2.0, 0.0});
    Tensor shifted = Tensor::vector({5.3, 3.8, 7.0, 5.0});
    Tensor a = g.value(g.softmax(g.input(logits)));
    Tensor b = g.value(g.softmax(g.input(shifted)));
    for (std::size_t i = 0; i < 4; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
  }
  {
    ad::Graph g;
    AttentionParams p = AttentionParams::bind(g, zero_params(d), d.kernel_width);
    EncoderMemory empty;
    CHECK_THROWS_AS(output_probability(g, p, g.input(Tensor::zeros({d.query})), empty, std::nullopt,
                                       AttentionMode{false, Transition::kFull}),
                    InvalidArgument);
  }
}

TEST_CASE("location_features") {
  AttentionDims d = small_dims();
  ParamSet params = zero_params(d);
  params.set("att.loc.K", Tensor::matrix(2, 3, {0, 1, 0, 0.5, 0.5, 0.5}));
  for (std::size_t n : {1u, 2u, 9u}) {
    ad::Graph g;
    AttentionParams p = AttentionParams::bind(g, params, d.kernel_width);
    Tensor zeros = g.value(location_features(g, p, g.input(Tensor::zeros({n}))));
    CHECK(zeros == Tensor::zeros({n, 2}));
    std::vector<double> cum(n);
    for (std::size_t i = 0; i < n; ++i) cum[i] = 0.1 * static_cast<double>(i + 1);
    Tensor f = g.value(location_features(g, p, g.input(Tensor::vector(cum))));
    CHECK(f.rows() == n);
    for (std::size_t i = 0; i < n; ++i) CHECK(f.at(i, 0) == cum[i]);
  }
}

TEST_CASE("transition_probability") {
  AttentionDims d = small_dims();
  Fixture f(2);
  ParamSet zero = zero_params(d);
  for (Transition tr : {Transition::kFull, Transition::kFixedHalf, Transition::kPhonemeOnly,
                        Transition::kTimeOnly}) {
    CAPTURE(transition_name(tr));
    AttentionMode mode{true, tr};
    {
      ad::Graph g;
      AttentionParams p = AttentionParams::bind(g, zero, d.kernel_width);
      EncoderMemory mem = prepare_memory(g, p, g.input(f.states), mode);
      NodeRef pos = embed_position(g, p, g.input(f.triples[0]));
      NodeRef loc = location_features(g, p, g.input(Tensor::zeros({f.n})));
      Tensor u = g.value(transition_probability(g, p, g.input(f.query), mem, pos, loc, mode));
      for (double v : u.data()) CHECK(v == 0.5);
    }
    {
      ad::Graph g;
      AttentionParams p = AttentionParams::bind(g, f.params, d.kernel_width);
      EncoderMemory mem = prepare_memory(g, p, g.input(f.states), mode);
      NodeRef pos = embed_position(g, p, g.input(f.triples[0]));
      NodeRef loc = location_features(g, p, g.input(Tensor::vector({1, 1, 0.5, 0, 0, 0, 0})));
      Tensor u = g.value(transition_probability(g, p, g.input(f.query), mem, pos, loc, mode));
      REQUIRE(u.size() == f.n);
      for (double v : u.data()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        if (tr == Transition::kFixedHalf) CHECK(v == 0.5);
        if (tr == Transition::kTimeOnly) CHECK(v == u[0]);
      }
    }
  }
}

TEST_CASE("forward_step: hand example and limit cases") {
  ad::Graph g;
  AlignmentState s{g.input(Tensor::vector({0.7, 0.3, 0.0})), g.input(Tensor::zeros({3})),
                   g.input(Tensor::vector({0.5, 0.5, 0.5}))};
  NodeRef y = g.input(Tensor::vector({0.2, 0.5, 0.3}));
  StepResult r = forward_step(g, s, y, g.input(Tensor::vector({0.1, 0.1, 0.1})));
  const Tensor& a = g.value(r.alpha);
  // Independent scalar evaluation: alpha' = [0.07, 0.25, 0.045].
  CHECK(std::abs(a[0] - 0.1918) <= 1e-4);
  CHECK(std::abs(a[1] - 0.6849) <= 1e-4);
  CHECK(std::abs(a[2] - 0.1233) <= 1e-4);
  CHECK(g.value(r.state.cumulative) == a);
  CHECK(g.value(*r.state.prev_u) == Tensor::vector({0.1, 0.1, 0.1}));

  AlignmentState still{g.input(Tensor::vector({0.2, 0.5, 0.3})), g.input(Tensor::zeros({3})),
                       g.input(Tensor::zeros({3}))};
  Tensor same = g.value(forward_step(g, still, g.input(Tensor::filled({3}, 1.0 / 3.0)),
                                     g.input(Tensor::zeros({3})))
                            .alpha);
  for (std::size_t i = 0; i < 3; ++i) CHECK(same[i] == doctest::Approx(g.value(still.alpha)[i]).epsilon(1e-7));

  AlignmentState jump{g.input(Tensor::vector({1, 0, 0})), g.input(Tensor::zeros({3})),
                      g.input(Tensor::filled({3}, 1.0))};
  Tensor moved = g.value(forward_step(g, jump, g.input(Tensor::filled({3}, 1.0 / 3.0)),
                                      g.input(Tensor::filled({3}, 1.0)))
                             .alpha);
  CHECK(moved[0] == 0.0);
  CHECK(moved[1] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(moved[2] == 0.0);

  AlignmentState stuck{g.input(Tensor::vector({1, 0, 0})), g.input(Tensor::zeros({3})),
                       g.input(Tensor::zeros({3}))};
  CHECK_THROWS_AS(forward_step(g, stuck, g.input(Tensor::vector({0, 0.5, 0.5})), g.input(Tensor::zeros({3}))),
                  AlignmentCollapse);
}

TEST_CASE("forward_step: equals scalar-agent forward attention when u is constant over n") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = 12;
  std::vector<double> reference(n, 0.0);
  reference[0] = 1.0;
  ad::Graph g;
  AlignmentState state = initial_state(g, n);
  double max_diff = 0.0;
  double u_prev = unit(rng);
  state.prev_u = g.input(Tensor::filled({n}, u_prev));
  for (int step = 0; step < 50; ++step) {
    std::vector<double> logits(n);
    for (double& v : logits) v = 3.0 * (unit(rng) - 0.5);
    NodeRef y = g.softmax(g.input(Tensor::vector(logits)));
    const std::vector<double> yv(g.value(y).data().begin(), g.value(y).data().end());
    const double u_now = unit(rng);
    StepResult r = forward_step(g, state, y, g.input(Tensor::filled({n}, u_now)));
    reference = scalar_agent_step(reference, u_prev, yv);
    for (std::size_t i = 0; i < n; ++i) max_diff = std::max(max_diff, std::abs(g.value(r.alpha)[i] - reference[i]));
    state = r.state;
    u_prev = u_now;
  }
  CHECK(max_diff <= 1e-12);
}

TEST_CASE("context") {
  ad::Graph g;
  Tensor x = Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6});
  AttentionDims d = small_dims();
  AttentionParams p = AttentionParams::bind(g, zero_params(d), d.kernel_width);
  d.encoder = 2;
  ParamSet p2 = zero_params(d);
  ad::Graph g2;
  AttentionParams pp = AttentionParams::bind(g2, p2, d.kernel_width);
  EncoderMemory mem = prepare_memory(g2, pp, g2.input(x), AttentionMode{});
  CHECK(g2.value(context(g2, g2.input(Tensor::vector({0, 1, 0})), mem)) == Tensor::vector({3, 4}));
  Tensor mean = g2.value(context(g2, g2.input(Tensor::filled({3}, 1.0 / 3.0)), mem));
  CHECK(mean[0] == doctest::Approx(3.0));
  CHECK(mean[1] == doctest::Approx(4.0));
  Tensor a = g2.value(context(g2, g2.input(Tensor::vector({0.2, 0.3, 0.5})), mem));
  Tensor b = g2.value(context(g2, g2.input(Tensor::vector({0.6, 0.4, 0.0})), mem));
  Tensor mix = g2.value(context(g2, g2.input(Tensor::vector({0.4, 0.35, 0.25})), mem));
  for (std::size_t i = 0; i < 2; ++i) CHECK(mix[i] == doctest::Approx(0.5 * a[i] + 0.5 * b[i]).epsilon(1e-14));
  (void)p;
}

TEST_CASE("attend: support growth from one-hot start") {
  Fixture f(3, 6);
  for (Transition tr : {Transition::kFull, Transition::kFixedHalf, Transition::kPhonemeOnly,
                        Transition::kTimeOnly}) {
    AttentionMode mode{true, tr};
    ad::Graph g;
    AttentionParams p = AttentionParams::bind(g, f.params, f.dims.kernel_width);
    EncoderMemory mem = prepare_memory(g, p, g.input(f.states), mode);
    AlignmentState state = initial_state(g, f.n);
    for (std::size_t t = 0; t < 6; ++t) {
      AttendResult r = attend(g, p, mode, g.input(f.query), mem, g.input(f.triples[t]), state);
      const Tensor& a = g.value(r.alpha);
      for (std::size_t n = t + 2; n < f.n; ++n) CHECK(a[n] == 0.0);
      if (t == 0) CHECK(a[0] + a[1] == doctest::Approx(1.0).epsilon(1e-7));
      state = r.state;
    }
  }
}

TEST_CASE("attend: fixed_half equals full mode with u forced to 0.5") {
  Fixture f(4, 5);
  ad::Graph g;
  AttentionParams p = AttentionParams::bind(g, f.params, f.dims.kernel_width);
  AttentionMode half{true, Transition::kFixedHalf};
  AttentionMode full{true, Transition::kFull};
  EncoderMemory mem_half = prepare_memory(g, p, g.input(f.states), half);
  EncoderMemory mem_full = prepare_memory(g, p, g.input(f.states), full);
  AlignmentState a = initial_state(g, f.n);
  AlignmentState b = initial_state(g, f.n);
  for (std::size_t t = 0; t < 5; ++t) {
    AttendResult r = attend(g, p, half, g.input(f.query), mem_half, g.input(f.triples[t]), a);
    NodeRef pos = embed_position(g, p, g.input(f.triples[t]));
    NodeRef y = output_probability(g, p, g.input(f.query), mem_full, pos, full);
    StepResult manual = forward_step(g, b, y, g.input(Tensor::filled({f.n}, 0.5)));
    CHECK(g.value(r.alpha) == g.value(manual.alpha));
    a = r.state;
    b = manual.state;
  }
}

TEST_CASE("attend: randomized invariants") {
  std::mt19937_64 rng(8);
  int steps = 0;
  for (int utt = 0; utt < 25; ++utt) {
    Fixture f(100 + static_cast<std::uint64_t>(utt), 40);
    const Transition tr = static_cast<Transition>(utt % 4);
    AttentionMode mode{utt % 5 != 0, tr};
    ad::Graph g;
    AttentionParams p = AttentionParams::bind(g, f.params, f.dims.kernel_width);
    EncoderMemory mem = prepare_memory(g, p, g.input(f.states), mode);
    AlignmentState state = initial_state(g, f.n);
    for (std::size_t t = 0; t < 40; ++t, ++steps) {
      Tensor q = random_tensor({f.dims.query}, rng);
      AttendResult r = attend(g, p, mode, g.input(q), mem, g.input(f.triples[t]), state);
      const Tensor& prev = g.value(state.alpha);
      const Tensor& y = g.value(r.y);
      const Tensor& u = g.value(r.u);
      const Tensor& alpha = g.value(r.alpha);
      double total = 0.0;
      for (double v : alpha.data()) total += v;
      CHECK(std::abs(total - 1.0) <= 1e-6);
      for (double v : u.data()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
      for (std::size_t n = t + 2; n < f.n; ++n) CHECK(alpha[n] == 0.0);
      // No mass creation before normalisation.
      const Tensor& up = g.value(state.prev_u.value_or(r.u));
      double unnorm = 0.0, prev_mass = 0.0;
      for (std::size_t n = 0; n < f.n; ++n) {
        const double arrive = n == 0 ? 0.0 : up[n - 1] * prev[n - 1];
        unnorm += ((1.0 - up[n]) * prev[n] + arrive) * y[n];
        prev_mass += prev[n];
      }
      const double ymax = *std::max_element(y.data().begin(), y.data().end());
      CHECK(unnorm <= ymax * prev_mass + 1e-15);
      state = r.state;
    }
  }
  CHECK(steps == 1000);
}

TEST_CASE("attend: gradients w.r.t. every attention parameter") {
  Fixture f(9, 4);
  for (Transition tr : {Transition::kFull, Transition::kPhonemeOnly, Transition::kTimeOnly}) {
    CAPTURE(transition_name(tr));
    AttentionMode mode{true, tr};
    ad::LossBuilder build = [&](ad::Graph& g, const ParamSet& params) {
      AttentionParams p = AttentionParams::bind(g, params, f.dims.kernel_width);
      EncoderMemory mem = prepare_memory(g, p, g.input(f.states), mode);
      AlignmentState state = initial_state(g, f.n);
      std::vector<NodeRef> terms;
      for (std::size_t t = 0; t < 4; ++t) {
        AttendResult r = attend(g, p, mode, g.input(f.query), mem, g.input(f.triples[t]), state);
        Tensor w = Tensor::vector({0.3, -0.2, 0.5, 0.1});
        terms.push_back(g.sum(g.mul(r.context, g.input(w))));
        terms.push_back(g.sum(g.mul(r.alpha, g.input(Tensor::vector({1, 2, 3, 4, 5, 6, 7})))));
        state = r.state;
      }
      return g.sum(g.concat(terms));
    };
    ad::GradCheckResult r = ad::finite_diff_check(build, f.params, ad::GradCheckOptions{});
    CAPTURE(r.worst_param);
    CAPTURE(r.analytic);
    CAPTURE(r.numeric);
    CHECK(r.max_rel_error <= 1e-4);
  }
}
