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

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace npat::ad {

using Dims = std::vector<std::size_t>;

std::string dims_to_string(const Dims& dims);

// Dense row-major array of doubles. Rank 1 or 2 in practice; scalars are {1}.
// Every constructor rejects non-finite values.
class Tensor {
 public:
  Tensor() : dims_{1}, data_(1, 0.0) {}
  Tensor(Dims dims, std::vector<double> data);

  static Tensor zeros(Dims dims);
  static Tensor filled(Dims dims, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  const Dims& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const { return dims_[0]; }
  std::size_t cols() const { return dims_.size() > 1 ? dims_[1] : 1; }
  bool is_scalar() const { return data_.size() == 1; }

  std::span<const double> data() const { return data_; }
  const double* raw() const { return data_.data(); }
  double operator[](std::size_t i) const { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double item() const;

  // Mutation is reserved for parameter updates; graph values are never mutated.
  std::span<double> mutable_data() { return data_; }

  bool operator==(const Tensor& other) const = default;

 private:
  Dims dims_;
  std::vector<double> data_;
};

// Named parameter tensors. Names are unique; iteration order is lexicographic.
class ParamSet {
 public:
  void add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const;
  const Tensor& at(const std::string& name) const;
  Tensor& mutable_at(const std::string& name);
  void set(const std::string& name, Tensor value);

  std::size_t size() const { return tensors_.size(); }
  std::size_t total_elements() const;
  std::vector<std::string> names() const;

  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  bool operator==(const ParamSet& other) const = default;

 private:
  std::map<std::string, Tensor> tensors_;
};

using GradMap = std::map<std::string, Tensor>;

}  // namespace npat::ad
