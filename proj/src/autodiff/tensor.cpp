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

#include "autodiff/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "common/error.hpp"

namespace npat::ad {

std::string dims_to_string(const Dims& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << 'x';
    os << dims[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Dims dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (dims_.empty()) throw DimensionError("tensor must have at least one dimension");
  std::size_t n = 1;
  for (std::size_t d : dims_) {
    if (d == 0) throw DimensionError("tensor dims must be positive, got " + dims_to_string(dims_));
    n *= d;
  }
  if (n != data_.size()) {
    throw DimensionError("tensor " + dims_to_string(dims_) + " expects " + std::to_string(n) +
                         " values, got " + std::to_string(data_.size()));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw NumericError("non-finite value at index " + std::to_string(i) + " of tensor " +
                         dims_to_string(dims_));
    }
  }
}

Tensor Tensor::zeros(Dims dims) { return filled(std::move(dims), 0.0); }

Tensor Tensor::filled(Dims dims, double value) {
  std::size_t n = std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  return Tensor(std::move(dims), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  Dims dims{values.size()};
  return Tensor(std::move(dims), std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

double Tensor::item() const {
  if (!is_scalar()) throw DimensionError("item() on non-scalar tensor " + dims_to_string(dims_));
  return data_[0];
}

void ParamSet::add(const std::string& name, Tensor value) {
  if (!tensors_.emplace(name, std::move(value)).second) {
    throw InvalidArgument("duplicate parameter name '" + name + "'");
  }
}

bool ParamSet::contains(const std::string& name) const { return tensors_.count(name) != 0; }

const Tensor& ParamSet::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw InvalidArgument("unknown parameter '" + name + "'");
  return it->second;
}

Tensor& ParamSet::mutable_at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw InvalidArgument("unknown parameter '" + name + "'");
  return it->second;
}

void ParamSet::set(const std::string& name, Tensor value) {
  Tensor& slot = mutable_at(name);
  if (slot.dims() != value.dims()) {
    throw DimensionError("parameter '" + name + "' is " + dims_to_string(slot.dims()) +
                         ", cannot assign " + dims_to_string(value.dims()));
  }
  slot = std::move(value);
}

std::size_t ParamSet::total_elements() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.size();
  return n;
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [name, _] : tensors_) out.push_back(name);
  return out;
}

}  // namespace npat::ad
