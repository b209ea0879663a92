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
#include <unordered_map>
#include <vector>

#include "autodiff/tensor.hpp"

namespace npat::ad {

struct NodeRef {
  std::uint32_t index = 0;
};

enum class OpKind : std::uint8_t {
  kInput,
  kParam,
  kAdd,
  kSub,
  kMul,
  kMatVec,
  kConcat,
  kSlice,
  kReshape,
  kTranspose,
  kSum,
  kTanh,
  kSigmoid,
  kSoftmax,
  kSquaredNorm,
  kScale,
  kNormalize,
  kConv1d,
};

const char* op_name(OpKind kind);

// Eagerly evaluated computation graph with a reverse pass.
//
// Every node's value is computed once, when the node is created, so shape
// errors surface at construction and name both operands. Nodes are appended
// in topological order; the reverse pass walks them backwards. A graph is
// single-threaded; build one graph per utterance per thread.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  NodeRef input(Tensor value);
  // Binds a parameter by name. Repeated calls return the same node.
  NodeRef param(const std::string& name, const ParamSet& params);

  // a + b. Same dims, or a is R x C and b is a length-C bias added to every row.
  NodeRef add(NodeRef a, NodeRef b);
  NodeRef sub(NodeRef a, NodeRef b);
  NodeRef mul(NodeRef a, NodeRef b);
  // m: R x K. x of length K gives length R; x of N x K gives N x R (each row
  // of x multiplied by m).
  NodeRef matvec(NodeRef m, NodeRef x);
  // Vectors concatenate end to end; matrices concatenate columns.
  NodeRef concat(const std::vector<NodeRef>& parts);
  // Half-open range along the leading axis (elements of a vector, rows of a matrix).
  NodeRef slice(NodeRef x, std::size_t begin, std::size_t end);
  NodeRef reshape(NodeRef x, Dims dims);
  NodeRef transpose(NodeRef x);
  NodeRef sum(NodeRef x);
  NodeRef tanh(NodeRef x);
  NodeRef sigmoid(NodeRef x);
  // Vector softmax with max-subtraction.
  NodeRef softmax(NodeRef x);
  NodeRef squared_norm(NodeRef x);
  NodeRef scale(NodeRef x, double factor);
  // x / (sum(x) + eps) for a vector x.
  NodeRef normalize(NodeRef x, double eps);
  // Same-padded 1-D convolution over rows of x (L x Cin) with w of
  // Cout x (width * Cin), width odd; tap d reads row t + d - width/2.
  NodeRef conv1d(NodeRef x, NodeRef w, std::size_t width);

  const Tensor& value(NodeRef n) const { return nodes_[n.index].value; }
  OpKind kind(NodeRef n) const { return nodes_[n.index].kind; }
  std::size_t size() const { return nodes_.size(); }
  bool requires_grad(NodeRef n) const { return nodes_[n.index].requires_grad; }

  // Reverse pass from a scalar node. Gradients live until the next call.
  void backward(NodeRef loss);
  // Gradient of the last backward() root w.r.t. n, or zeros if n is unreached.
  Tensor grad(NodeRef n) const;
  // Gradients for every parameter in params; unbound ones get zeros.
  GradMap param_gradients(const ParamSet& params) const;

 private:
  struct Node {
    OpKind kind = OpKind::kInput;
    std::vector<NodeRef> parents;
    Tensor value;
    bool requires_grad = false;
    double scalar = 0.0;
    std::size_t begin = 0;
  };

  NodeRef push(OpKind kind, std::vector<NodeRef> parents, Tensor value, double scalar = 0.0,
               std::size_t begin = 0);
  const Node& node(NodeRef n) const { return nodes_[n.index]; }
  void check_ref(NodeRef n) const;
  void backprop_node(std::size_t i);
  std::vector<double>& grad_slot(NodeRef n);

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  std::unordered_map<std::string, NodeRef> params_;
};

Tensor evaluate(const Graph& graph, NodeRef root);

// d loss / d p for every p in params. Throws if loss is not scalar.
GradMap gradients(Graph& graph, NodeRef loss, const ParamSet& params);

}  // namespace npat::ad
