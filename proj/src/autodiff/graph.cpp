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

#include "autodiff/graph.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace npat::ad {

namespace {

std::string describe(const char* op, const Dims& a, const Dims& b) {
  return std::string(op) + ": incompatible operands " + dims_to_string(a) + " and " +
         dims_to_string(b);
}

}  // namespace

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kParam: return "param";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kMatVec: return "matvec";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kReshape: return "reshape";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kSum: return "sum";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kSquaredNorm: return "squared-norm";
    case OpKind::kScale: return "scale";
    case OpKind::kNormalize: return "normalize";
    case OpKind::kConv1d: return "conv1d";
  }
  return "?";
}

namespace {

// Four interleaved partial sums; fixed order, so results are reproducible.
double dot(const double* __restrict a, const double* __restrict b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    s0 += a[j] * b[j];
    s1 += a[j + 1] * b[j + 1];
    s2 += a[j + 2] * b[j + 2];
    s3 += a[j + 3] * b[j + 3];
  }
  for (; j < n; ++j) s0 += a[j] * b[j];
  return (s0 + s1) + (s2 + s3);
}

void axpy(double alpha, const double* __restrict x, double* __restrict y, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) y[j] += alpha * x[j];
}

}  // namespace

void Graph::check_ref(NodeRef n) const {
  if (n.index >= nodes_.size()) {
    throw InvalidArgument("node reference " + std::to_string(n.index) + " does not belong to graph");
  }
}

NodeRef Graph::push(OpKind kind, std::vector<NodeRef> parents, Tensor value, double scalar,
                    std::size_t begin) {
  Node node;
  node.kind = kind;
  node.requires_grad = kind == OpKind::kParam;
  for (NodeRef p : parents) node.requires_grad = node.requires_grad || nodes_[p.index].requires_grad;
  node.parents = std::move(parents);
  node.value = std::move(value);
  node.scalar = scalar;
  node.begin = begin;
  nodes_.push_back(std::move(node));
  return NodeRef{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeRef Graph::input(Tensor value) { return push(OpKind::kInput, {}, std::move(value)); }

NodeRef Graph::param(const std::string& name, const ParamSet& params) {
  auto it = params_.find(name);
  if (it != params_.end()) return it->second;
  NodeRef ref = push(OpKind::kParam, {}, params.at(name));
  params_.emplace(name, ref);
  return ref;
}

NodeRef Graph::add(NodeRef a, NodeRef b) {
  check_ref(a);
  check_ref(b);
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  std::vector<double> out(x.data().begin(), x.data().end());
  if (x.dims() == y.dims()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  } else if (x.rank() == 2 && y.rank() == 1 && y.size() == x.cols()) {
    const std::size_t c = x.cols();
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t j = 0; j < c; ++j) out[r * c + j] += y[j];
  } else {
    throw DimensionError(describe("add", x.dims(), y.dims()));
  }
  return push(OpKind::kAdd, {a, b}, Tensor(x.dims(), std::move(out)));
}

NodeRef Graph::sub(NodeRef a, NodeRef b) {
  check_ref(a);
  check_ref(b);
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  std::vector<double> out(x.data().begin(), x.data().end());
  if (x.dims() == y.dims()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  } else if (x.rank() == 2 && y.rank() == 1 && y.size() == x.cols()) {
    const std::size_t c = x.cols();
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t j = 0; j < c; ++j) out[r * c + j] -= y[j];
  } else {
    throw DimensionError(describe("sub", x.dims(), y.dims()));
  }
  return push(OpKind::kSub, {a, b}, Tensor(x.dims(), std::move(out)));
}

NodeRef Graph::mul(NodeRef a, NodeRef b) {
  check_ref(a);
  check_ref(b);
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.dims() != y.dims()) throw DimensionError(describe("mul", x.dims(), y.dims()));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return push(OpKind::kMul, {a, b}, Tensor(x.dims(), std::move(out)));
}

NodeRef Graph::matvec(NodeRef m, NodeRef x) {
  check_ref(m);
  check_ref(x);
  const Tensor& w = value(m);
  const Tensor& v = value(x);
  if (w.rank() != 2) throw DimensionError(describe("matvec", w.dims(), v.dims()));
  const std::size_t rows = w.rows();
  const std::size_t k = w.cols();
  const double* wp = w.raw();
  if (v.rank() == 1 && v.size() == k) {
    std::vector<double> out(rows);
    const double* vp = v.raw();
    for (std::size_t i = 0; i < rows; ++i) {
      out[i] = dot(wp + i * k, vp, k);
    }
    return push(OpKind::kMatVec, {m, x}, Tensor::vector(std::move(out)));
  }
  if (v.rank() == 2 && v.cols() == k) {
    const std::size_t n = v.rows();
    std::vector<double> out(n * rows);
    const double* vp = v.raw();
    for (std::size_t r = 0; r < n; ++r) {
      const double* vr = vp + r * k;
      double* o = out.data() + r * rows;
      for (std::size_t i = 0; i < rows; ++i) {
        o[i] = dot(wp + i * k, vr, k);
      }
    }
    return push(OpKind::kMatVec, {m, x}, Tensor::matrix(n, rows, std::move(out)));
  }
  throw DimensionError(describe("matvec", w.dims(), v.dims()));
}

NodeRef Graph::concat(const std::vector<NodeRef>& parts) {
  if (parts.empty()) throw InvalidArgument("concat: no operands");
  for (NodeRef p : parts) check_ref(p);
  const Tensor& first = value(parts.front());
  if (first.rank() == 1) {
    std::vector<double> out;
    for (NodeRef p : parts) {
      const Tensor& t = value(p);
      if (t.rank() != 1) throw DimensionError(describe("concat", first.dims(), t.dims()));
      out.insert(out.end(), t.data().begin(), t.data().end());
    }
    return push(OpKind::kConcat, parts, Tensor::vector(std::move(out)));
  }
  const std::size_t rows = first.rows();
  std::size_t cols = 0;
  for (NodeRef p : parts) {
    const Tensor& t = value(p);
    if (t.rank() != 2 || t.rows() != rows) {
      throw DimensionError(describe("concat", first.dims(), t.dims()));
    }
    cols += t.cols();
  }
  std::vector<double> out(rows * cols);
  std::size_t offset = 0;
  for (NodeRef p : parts) {
    const Tensor& t = value(p);
    const std::size_t c = t.cols();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(t.raw() + r * c, c, out.data() + r * cols + offset);
    offset += c;
  }
  return push(OpKind::kConcat, parts, Tensor::matrix(rows, cols, std::move(out)));
}

NodeRef Graph::slice(NodeRef x, std::size_t begin, std::size_t end) {
  check_ref(x);
  const Tensor& t = value(x);
  if (begin >= end || end > t.rows()) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid for " + dims_to_string(t.dims()));
  }
  const std::size_t stride = t.size() / t.rows();
  std::vector<double> out(t.raw() + begin * stride, t.raw() + end * stride);
  Dims dims = t.dims();
  dims[0] = end - begin;
  return push(OpKind::kSlice, {x}, Tensor(std::move(dims), std::move(out)), 0.0, begin);
}

NodeRef Graph::reshape(NodeRef x, Dims dims) {
  check_ref(x);
  const Tensor& t = value(x);
  std::vector<double> data(t.data().begin(), t.data().end());
  Dims from = t.dims();
  try {
    return push(OpKind::kReshape, {x}, Tensor(std::move(dims), std::move(data)));
  } catch (const DimensionError&) {
    throw DimensionError("reshape: cannot view " + dims_to_string(from) + " with a different size");
  }
}

NodeRef Graph::transpose(NodeRef x) {
  check_ref(x);
  const Tensor& t = value(x);
  if (t.rank() != 2) throw DimensionError("transpose: expected matrix, got " + dims_to_string(t.dims()));
  const std::size_t r = t.rows(), c = t.cols();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = t.at(i, j);
  return push(OpKind::kTranspose, {x}, Tensor::matrix(c, r, std::move(out)));
}

NodeRef Graph::sum(NodeRef x) {
  check_ref(x);
  double acc = 0.0;
  for (double v : value(x).data()) acc += v;
  return push(OpKind::kSum, {x}, Tensor::scalar(acc));
}

NodeRef Graph::tanh(NodeRef x) {
  check_ref(x);
  const Tensor& t = value(x);
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(t[i]);
  return push(OpKind::kTanh, {x}, Tensor(t.dims(), std::move(out)));
}

NodeRef Graph::sigmoid(NodeRef x) {
  check_ref(x);
  const Tensor& t = value(x);
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = t[i];
    // Branch keeps exp() from overflowing for large |v|.
    if (v >= 0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  return push(OpKind::kSigmoid, {x}, Tensor(t.dims(), std::move(out)));
}

NodeRef Graph::softmax(NodeRef x) {
  check_ref(x);
  const Tensor& t = value(x);
  if (t.rank() != 1) throw DimensionError("softmax: expected vector, got " + dims_to_string(t.dims()));
  const double mx = *std::max_element(t.data().begin(), t.data().end());
  std::vector<double> out(t.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(t[i] - mx);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return push(OpKind::kSoftmax, {x}, Tensor(t.dims(), std::move(out)));
}

NodeRef Graph::squared_norm(NodeRef x) {
  check_ref(x);
  double acc = 0.0;
  for (double v : value(x).data()) acc += v * v;
  return push(OpKind::kSquaredNorm, {x}, Tensor::scalar(acc));
}

NodeRef Graph::scale(NodeRef x, double factor) {
  check_ref(x);
  const Tensor& t = value(x);
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * t[i];
  return push(OpKind::kScale, {x}, Tensor(t.dims(), std::move(out)), factor);
}

NodeRef Graph::normalize(NodeRef x, double eps) {
  check_ref(x);
  const Tensor& t = value(x);
  if (t.rank() != 1) throw DimensionError("normalize: expected vector, got " + dims_to_string(t.dims()));
  double total = 0.0;
  for (double v : t.data()) total += v;
  const double denom = total + eps;
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t[i] / denom;
  return push(OpKind::kNormalize, {x}, Tensor(t.dims(), std::move(out)), eps);
}

NodeRef Graph::conv1d(NodeRef x, NodeRef w, std::size_t width) {
  check_ref(x);
  check_ref(w);
  const Tensor& in = value(x);
  const Tensor& k = value(w);
  if (width % 2 == 0) throw InvalidArgument("conv1d: kernel width must be odd");
  if (in.rank() != 2 || k.rank() != 2 || k.cols() != width * in.cols()) {
    throw DimensionError(describe("conv1d", in.dims(), k.dims()));
  }
  const std::size_t len = in.rows(), cin = in.cols(), cout = k.rows();
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(width / 2);
  std::vector<double> out(len * cout, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    double* o = out.data() + t * cout;
    for (std::size_t d = 0; d < width; ++d) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(d) - half;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
      const double* xr = in.raw() + static_cast<std::size_t>(src) * cin;
      for (std::size_t oc = 0; oc < cout; ++oc) {
        o[oc] += dot(k.raw() + oc * width * cin + d * cin, xr, cin);
      }
    }
  }
  return push(OpKind::kConv1d, {x, w}, Tensor::matrix(len, cout, std::move(out)), 0.0, width);
}

std::vector<double>& Graph::grad_slot(NodeRef n) {
  auto& g = grads_[n.index];
  if (g.empty()) g.assign(nodes_[n.index].value.size(), 0.0);
  return g;
}

void Graph::backward(NodeRef loss) {
  check_ref(loss);
  if (!value(loss).is_scalar()) {
    throw DimensionError("backward: loss must be scalar, got " + dims_to_string(value(loss).dims()));
  }
  grads_.assign(nodes_.size(), {});
  grad_slot(loss)[0] = 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    if (grads_[i].empty() || !nodes_[i].requires_grad) continue;
    backprop_node(i);
  }
}

void Graph::backprop_node(std::size_t i) {
  const Node& n = nodes_[i];
  const std::vector<double>& g = grads_[i];
  const Tensor& y = n.value;
  auto wants = [&](std::size_t p) { return nodes_[n.parents[p].index].requires_grad; };

  switch (n.kind) {
    case OpKind::kInput:
    case OpKind::kParam:
      return;
    case OpKind::kAdd:
    case OpKind::kSub: {
      const double sign = n.kind == OpKind::kAdd ? 1.0 : -1.0;
      if (wants(0)) {
        auto& ga = grad_slot(n.parents[0]);
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
      }
      if (wants(1)) {
        auto& gb = grad_slot(n.parents[1]);
        if (gb.size() == g.size()) {
          for (std::size_t k = 0; k < g.size(); ++k) gb[k] += sign * g[k];
        } else {
          const std::size_t c = gb.size();
          for (std::size_t r = 0; r < y.rows(); ++r)
            for (std::size_t j = 0; j < c; ++j) gb[j] += sign * g[r * c + j];
        }
      }
      return;
    }
    case OpKind::kMul: {
      const Tensor& a = value(n.parents[0]);
      const Tensor& b = value(n.parents[1]);
      if (wants(0)) {
        auto& ga = grad_slot(n.parents[0]);
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * b[k];
      }
      if (wants(1)) {
        auto& gb = grad_slot(n.parents[1]);
        for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k] * a[k];
      }
      return;
    }
    case OpKind::kMatVec: {
      const Tensor& w = value(n.parents[0]);
      const Tensor& v = value(n.parents[1]);
      const std::size_t rows = w.rows(), k = w.cols();
      const std::size_t batch = v.rank() == 1 ? 1 : v.rows();
      if (wants(0)) {
        auto& gw = grad_slot(n.parents[0]);
        for (std::size_t r = 0; r < batch; ++r) {
          const double* vr = v.raw() + r * k;
          const double* gr = g.data() + r * rows;
          for (std::size_t a = 0; a < rows; ++a) {
            const double ga = gr[a];
            if (ga == 0.0) continue;
            axpy(ga, vr, gw.data() + a * k, k);
          }
        }
      }
      if (wants(1)) {
        auto& gv = grad_slot(n.parents[1]);
        for (std::size_t r = 0; r < batch; ++r) {
          double* gvr = gv.data() + r * k;
          const double* gr = g.data() + r * rows;
          for (std::size_t a = 0; a < rows; ++a) {
            const double ga = gr[a];
            if (ga == 0.0) continue;
            axpy(ga, w.raw() + a * k, gvr, k);
          }
        }
      }
      return;
    }
    case OpKind::kConcat: {
      if (y.rank() == 1) {
        std::size_t offset = 0;
        for (std::size_t p = 0; p < n.parents.size(); ++p) {
          const std::size_t len = value(n.parents[p]).size();
          if (wants(p)) {
            auto& gp = grad_slot(n.parents[p]);
            for (std::size_t k = 0; k < len; ++k) gp[k] += g[offset + k];
          }
          offset += len;
        }
      } else {
        const std::size_t rows = y.rows(), cols = y.cols();
        std::size_t offset = 0;
        for (std::size_t p = 0; p < n.parents.size(); ++p) {
          const std::size_t c = value(n.parents[p]).cols();
          if (wants(p)) {
            auto& gp = grad_slot(n.parents[p]);
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t j = 0; j < c; ++j) gp[r * c + j] += g[r * cols + offset + j];
          }
          offset += c;
        }
      }
      return;
    }
    case OpKind::kSlice: {
      if (!wants(0)) return;
      auto& gp = grad_slot(n.parents[0]);
      const std::size_t stride = y.size() / y.rows();
      const std::size_t base = n.begin * stride;
      for (std::size_t k = 0; k < g.size(); ++k) gp[base + k] += g[k];
      return;
    }
    case OpKind::kReshape: {
      if (!wants(0)) return;
      auto& gp = grad_slot(n.parents[0]);
      for (std::size_t k = 0; k < g.size(); ++k) gp[k] += g[k];
      return;
    }
    case OpKind::kTranspose: {
      if (!wants(0)) return;
      auto& gp = grad_slot(n.parents[0]);
      const std::size_t r = y.rows(), c = y.cols();  // y is c_in x r_in transposed
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gp[j * r + i] += g[i * c + j];
      return;
    }
    case OpKind::kSum: {
      if (!wants(0)) return;
      auto& gp = grad_slot(n.parents[0]);
      for (double& v : gp) v += g[0];
      return;
    }
    case OpKind::kTanh: {
      if (!wants(0)) return;
      auto& gp = grad_slot(n.parents[0]);
      for (std::size_t k = 0; k < g.size(); ++k) gp[k] += g[k] * (1.0 - y[k] * y[k]);
      return;
    }
    case OpKind::kSigmoid: {
      if (!wants(0)) return;
      auto& gp = grad_slot(n.parents[0]);
      for (std::size_t k = 0; k < g.size(); ++k) gp[k] += g[k] * y[k] * (1.0 - y[k]);
      return;
    }
    case OpKind::kSoftmax: {
      if (!wants(0)) return;
      auto& gp = grad_slot(n.parents[0]);
      double dot = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) dot += g[k] * y[k];
      for (std::size_t k = 0; k < g.size(); ++k) gp[k] += y[k] * (g[k] - dot);
      return;
    }
    case OpKind::kSquaredNorm: {
      if (!wants(0)) return;
      const Tensor& x = value(n.parents[0]);
      auto& gp = grad_slot(n.parents[0]);
      for (std::size_t k = 0; k < gp.size(); ++k) gp[k] += 2.0 * x[k] * g[0];
      return;
    }
    case OpKind::kScale: {
      if (!wants(0)) return;
      auto& gp = grad_slot(n.parents[0]);
      for (std::size_t k = 0; k < g.size(); ++k) gp[k] += n.scalar * g[k];
      return;
    }
    case OpKind::kNormalize: {
      if (!wants(0)) return;
      const Tensor& x = value(n.parents[0]);
      double total = 0.0;
      for (double v : x.data()) total += v;
      const double denom = total + n.scalar;
      double gy = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) gy += g[k] * y[k];
      auto& gp = grad_slot(n.parents[0]);
      for (std::size_t k = 0; k < g.size(); ++k) gp[k] += (g[k] - gy) / denom;
      return;
    }
    case OpKind::kConv1d: {
      const Tensor& in = value(n.parents[0]);
      const Tensor& k = value(n.parents[1]);
      const std::size_t width = n.begin;
      const std::size_t len = in.rows(), cin = in.cols(), cout = k.rows();
      const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(width / 2);
      std::vector<double>* gx = wants(0) ? &grad_slot(n.parents[0]) : nullptr;
      std::vector<double>* gk = wants(1) ? &grad_slot(n.parents[1]) : nullptr;
      for (std::size_t t = 0; t < len; ++t) {
        const double* go = g.data() + t * cout;
        for (std::size_t d = 0; d < width; ++d) {
          const std::ptrdiff_t src =
              static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(d) - half;
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
          const std::size_t s = static_cast<std::size_t>(src);
          const double* xr = in.raw() + s * cin;
          for (std::size_t oc = 0; oc < cout; ++oc) {
            const double gv = go[oc];
            if (gv == 0.0) continue;
            const std::size_t koff = oc * width * cin + d * cin;
            if (gk) {
              axpy(gv, xr, gk->data() + koff, cin);
            }
            if (gx) {
              axpy(gv, k.raw() + koff, gx->data() + s * cin, cin);
            }
          }
        }
      }
      return;
    }
  }
}

Tensor Graph::grad(NodeRef n) const {
  check_ref(n);
  const Tensor& v = value(n);
  if (n.index >= grads_.size() || grads_[n.index].empty()) return Tensor::zeros(v.dims());
  return Tensor(v.dims(), grads_[n.index]);
}

GradMap Graph::param_gradients(const ParamSet& params) const {
  GradMap out;
  for (const auto& [name, tensor] : params) {
    auto it = params_.find(name);
    out.emplace(name, it == params_.end() ? Tensor::zeros(tensor.dims()) : grad(it->second));
  }
  return out;
}

Tensor evaluate(const Graph& graph, NodeRef root) { return graph.value(root); }

GradMap gradients(Graph& graph, NodeRef loss, const ParamSet& params) {
  graph.backward(loss);
  return graph.param_gradients(params);
}

}  // namespace npat::ad
