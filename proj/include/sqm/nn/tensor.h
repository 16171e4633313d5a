// sqm/nn/tensor.h

// Copyright 2026 The pstn-sqm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SQM_NN_TENSOR_H_
#define SQM_NN_TENSOR_H_

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace sqm::nn {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

inline std::size_t NumElements(const std::vector<int> &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

std::string ShapeString(const std::vector<int> &shape);

// Dense row-major tensor.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, T fill = T(0))
      : shape(std::move(s)), data(NumElements(shape), fill) {}

  std::size_t size() const { return data.size(); }
  T *ptr() { return data.data(); }
  const T *ptr() const { return data.data(); }
};

// A named model tensor.  Buffers (batch-norm running statistics) carry no
// gradient and are skipped by the optimizer.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;
};

// N x C x H x W activation block.
template <typename T>
struct Activation {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> data;

  Activation() = default;
  Activation(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        data(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0)) {}

  std::size_t per_item() const { return static_cast<std::size_t>(c) * h * w; }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::vector<int> dims() const { return {n, c, h, w}; }
  T *item(int i) { return data.data() + i * per_item(); }
  const T *item(int i) const { return data.data() + i * per_item(); }
};

}  // namespace sqm::nn

#endif  // SQM_NN_TENSOR_H_
