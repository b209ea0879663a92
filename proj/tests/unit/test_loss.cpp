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

#include <fstream>
#include <random>
#include <sstream>

#include "autodiff/gradcheck.hpp"
#include "common/error.hpp"
#include "common/format.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "loss/loss.hpp"

using namespace npat;
using namespace npat::loss;
using npat::testing::mora;

namespace {

// 100 frames per beat: note A is 90 frames with 3 morae, note B 60 frames with 1.
score::Score golden_score() {
  return score::make_score(120.0, 5.0,
                           {{60, 0.9, {mora({5, 0}), mora({6, 1}), mora({2})}}, {62, 0.6, {mora({7, 3})}}});
}

Matrix read_csv(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  Matrix m;
  std::string line;
  std::vector<double> values;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(parse_double(cell, "golden cell"));
      ++cols;
    }
    if (m.rows == 0) m.cols = cols;
    REQUIRE(cols == m.cols);
    ++m.rows;
  }
  m.data = std::move(values);
  return m;
}

Matrix column_stochastic(std::size_t n, std::size_t t, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix a(n, t);
  for (std::size_t c = 0; c < t; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += (a(r, c) = u(rng));
    for (std::size_t r = 0; r < n; ++r) a(r, c) /= s;
  }
  return a;
}

}  // namespace

TEST_CASE("band_penalty") {
  CHECK(band_penalty(10, 20, 10, 60) == 0.0);
  CHECK(band_penalty(10, 20, 19, 60) == 0.0);
  CHECK(band_penalty(10, 20, 19 + 30, 60) == 0.5);
  CHECK(band_penalty(10, 20, 10 - 30, 60) == 0.5);
  CHECK(band_penalty(100, 120, 119 + 60, 60) == 1.0);
  CHECK(band_penalty(100, 120, 119 + 500, 60) == 1.0);
  CHECK(band_penalty(100, 120, 0, 60) == 1.0);
}

TEST_CASE("penalty_matrix: golden two-note score") {
  PenaltyMatrix p = penalty_matrix(golden_score(), 1, 60, 15);
  Matrix golden = read_csv(std::string(NPAT_TEST_DATA_DIR) + "/penalty_golden.csv");
  REQUIRE(p.g.rows == golden.rows);
  REQUIRE(p.g.cols == golden.cols);
  CHECK(p.g.rows == 7);
  CHECK(p.g.cols == 150);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < golden.data.size(); ++i) mismatches += p.g.data[i] != golden.data[i];
  CHECK(mismatches == 0);
}

TEST_CASE("penalty_matrix: reduction samples every r-th frame") {
  score::Score s = golden_score();
  PenaltyMatrix full = penalty_matrix(s, 1);
  PenaltyMatrix reduced = penalty_matrix(s, 3);
  CHECK(reduced.g.cols == 50);
  for (std::size_t n = 0; n < full.g.rows; ++n) {
    for (std::size_t t = 0; t < reduced.g.cols; ++t) CHECK(reduced.g(n, t) == full.g(n, 3 * t));
  }
  score::Score odd = score::make_score(120.0, 5.0, {{60, 0.91, {mora({0})}}});
  CHECK(penalty_matrix(odd, 3).g.cols == 31);
  CHECK_THROWS_AS(penalty_matrix(s, 0), InvalidArgument);
  CHECK_THROWS_AS(penalty_matrix(s, 1, 0), InvalidArgument);
  CHECK_THROWS_AS(penalty_matrix(s, 1, 60, -1), InvalidArgument);
}

TEST_CASE("penalty_matrix: properties on random scores") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    score::Score s = testing::random_score(rng);
    const int r = 1 + trial % 3;
    PenaltyMatrix p = penalty_matrix(s, r);
    const auto spans = score::mora_boundaries(s);
    for (std::size_t n = 0; n < p.g.rows; ++n) {
      bool has_zero = false;
      for (std::size_t t = 0; t < p.g.cols; ++t) {
        const double v = p.g(n, t);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        has_zero |= v == 0.0;
      }
      CHECK(has_zero);
    }
    for (std::size_t t = 0; t < p.g.cols; ++t) {
      bool covered = false;
      for (std::size_t n = 0; n < p.g.rows; ++n) covered |= p.g(n, t) == 0.0;
      CHECK(covered);
    }
    for (const auto& span : spans) {
      for (std::size_t e = span.first_entry + 1; e < span.end_entry; ++e) {
        CHECK(std::equal(p.g.row(e).begin(), p.g.row(e).end(), p.g.row(span.first_entry).begin()));
      }
    }
  }
}

TEST_CASE("guided_attention_loss") {
  std::mt19937_64 rng(6);
  Matrix a = column_stochastic(5, 12, rng);
  CHECK(guided_attention_loss(Matrix(5, 12, 0.0), a) == 0.0);
  CHECK(guided_attention_loss(Matrix(5, 12, 1.0), a) == doctest::Approx(1.0 / 5.0).epsilon(1e-14));
  CHECK_THROWS_AS(guided_attention_loss(Matrix(5, 11, 1.0), a), DimensionError);

  // Alignment inside the zero bands.
  score::Score s = golden_score();
  PenaltyMatrix p = penalty_matrix(s, 1);
  Matrix inside(p.g.rows, p.g.cols);
  for (std::size_t t = 0; t < p.g.cols; ++t) {
    for (std::size_t n = 0; n < p.g.rows; ++n) {
      if (p.g(n, t) == 0.0) {
        inside(n, t) = 1.0;
        break;
      }
    }
  }
  CHECK(guided_attention_loss(p.g, inside) == 0.0);

  // Moving mass from a zero cell to a penalized cell strictly increases the loss.
  for (std::size_t t = 0; t < p.g.cols; t += 7) {
    std::size_t from = p.g.rows, to = p.g.rows;
    for (std::size_t n = 0; n < p.g.rows; ++n) {
      if (inside(n, t) == 1.0) from = n;
      if (p.g(n, t) > 0.0 && to == p.g.rows) to = n;
    }
    REQUIRE(from < p.g.rows);
    if (to == p.g.rows) continue;
    Matrix moved = inside;
    moved(from, t) = 0.75;
    moved(to, t) = 0.25;
    CHECK(guided_attention_loss(p.g, moved) > guided_attention_loss(p.g, inside));
  }
}

TEST_CASE("guided_attention_loss: graph form and gradient") {
  std::mt19937_64 rng(7);
  score::Score s = golden_score();
  PenaltyMatrix p = penalty_matrix(s, 3);
  const std::size_t n = p.g.rows, steps = p.g.cols;
  Matrix a = column_stochastic(n, steps, rng);

  ad::ParamSet params;
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<double> col(n);
    for (std::size_t r = 0; r < n; ++r) col[r] = a(r, t);
    params.add("col" + std::to_string(1000 + t), ad::Tensor::vector(col));
  }
  auto build = [&](ad::Graph& g, const ad::ParamSet& ps) {
    std::vector<NodeRef> cols;
    for (std::size_t t = 0; t < steps; ++t) cols.push_back(g.param("col" + std::to_string(1000 + t), ps));
    return guided_attention_loss(g, p.g, cols);
  };
  ad::Graph g;
  NodeRef loss = build(g, params);
  CHECK(g.value(loss).item() == doctest::Approx(guided_attention_loss(p.g, a)).epsilon(1e-14));
  g.backward(loss);
  ad::GradMap grads = g.param_gradients(params);
  const double scale = 1.0 / static_cast<double>(n * steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const ad::Tensor& gt = grads.at("col" + std::to_string(1000 + t));
    for (std::size_t r = 0; r < n; ++r) CHECK(gt[r] == doctest::Approx(p.g(r, t) * scale).epsilon(1e-14));
  }
  CHECK(ad::finite_diff_check(build, params, 1e-5) <= 1e-4);

  ad::Graph bad;
  CHECK_THROWS_AS(guided_attention_loss(bad, p.g, {}), DimensionError);
}

TEST_CASE("feature_loss") {
  Matrix o(3, 4, 0.5);
  CHECK(feature_loss(o, o) == 0.0);
  Matrix shifted(3, 4, 1.5);
  CHECK(feature_loss(o, shifted) == 1.0);
  Matrix one(1, 2), diff(1, 2);
  diff.data = {3.0, 4.0};
  CHECK(feature_loss(one, diff) == 12.5);
  CHECK_THROWS_AS(feature_loss(o, Matrix(4, 3)), DimensionError);

  ad::Graph g;
  NodeRef pred = g.input(to_tensor(diff));
  CHECK(g.value(feature_loss(g, pred, to_tensor(one))).item() == 12.5);
  CHECK_THROWS_AS(feature_loss(g, pred, to_tensor(o)), DimensionError);
}

TEST_CASE("total_loss") {
  std::mt19937_64 rng(8);
  score::Score s = golden_score();
  PenaltyMatrix p = penalty_matrix(s, 1);
  Matrix a = column_stochastic(p.g.rows, p.g.cols, rng);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix o(150, 8), dec(150, 8), post(150, 8);
  for (std::size_t i = 0; i < o.data.size(); ++i) {
    o.data[i] = noise(rng);
    dec.data[i] = noise(rng);
    post.data[i] = noise(rng);
  }
  LossReport r = total_loss(o, dec, post, p.g, a);
  CHECK(r.lambda == 10.0);
  CHECK(std::abs(r.total - (r.feat_decoder + r.feat_postnet + 10.0 * r.guided)) <= 1e-12);
  LossReport zero = total_loss(o, dec, post, p.g, a, 0.0);
  CHECK(zero.total == zero.feat_decoder + zero.feat_postnet);
  CHECK_THROWS_AS(total_loss(o, dec, post, p.g, a, -1.0), InvalidArgument);

  Matrix inside(p.g.rows, p.g.cols);
  for (std::size_t t = 0; t < p.g.cols; ++t) {
    for (std::size_t n = 0; n < p.g.rows; ++n) {
      if (p.g(n, t) == 0.0) {
        inside(n, t) = 1.0;
        break;
      }
    }
  }
  CHECK(total_loss(o, o, o, p.g, inside).total == 0.0);

  // Graph form agrees and is differentiable in every input.
  ad::ParamSet params;
  params.add("dec", to_tensor(dec));
  params.add("post", to_tensor(post));
  for (std::size_t t = 0; t < p.g.cols; ++t) {
    std::vector<double> col(p.g.rows);
    for (std::size_t n = 0; n < p.g.rows; ++n) col[n] = a(n, t);
    params.add("a" + std::to_string(1000 + t), ad::Tensor::vector(col));
  }
  const ad::Tensor target = to_tensor(o);
  auto build = [&](ad::Graph& g, const ad::ParamSet& ps) {
    std::vector<NodeRef> cols;
    for (std::size_t t = 0; t < p.g.cols; ++t) cols.push_back(g.param("a" + std::to_string(1000 + t), ps));
    return total_loss(g, target, g.param("dec", ps), g.param("post", ps), p.g, cols).total;
  };
  ad::Graph g;
  std::vector<NodeRef> cols;
  for (std::size_t t = 0; t < p.g.cols; ++t) cols.push_back(g.param("a" + std::to_string(1000 + t), params));
  LossNodes nodes = total_loss(g, target, g.param("dec", params), g.param("post", params), p.g, cols);
  LossReport gr = report(g, nodes, 10.0);
  CHECK(gr.feat_decoder == doctest::Approx(r.feat_decoder).epsilon(1e-13));
  CHECK(gr.feat_postnet == doctest::Approx(r.feat_postnet).epsilon(1e-13));
  CHECK(gr.guided == doctest::Approx(r.guided).epsilon(1e-13));
  CHECK(std::abs(gr.total - (gr.feat_decoder + gr.feat_postnet + 10.0 * gr.guided)) <= 1e-12);
  ad::GradCheckOptions opts;
  opts.max_coords_per_param = 20;
  CHECK(ad::finite_diff_check(build, params, opts).max_rel_error <= 1e-4);
}
