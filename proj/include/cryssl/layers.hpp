// Copyright 2026 The cryssl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Minimal CPU layers for the convolutional encoder. Every layer caches what
// its backward pass needs when `keep_cache` is set, accumulates into the
// gradients of trainable parameters, and returns the input gradient only when
// asked for it. Instantiated for float (training) and double (gradient checks).

#include <cstdint>
#include <string>
#include <vector>

#include "cryssl/util.hpp"

namespace cryssl::nn {

enum class ParamKind { kWeight, kBnAffine, kBnStat };

std::string_view to_string(ParamKind k);

// train: batch-norm uses batch statistics and updates running statistics.
// eval: batch-norm uses running statistics.
enum class Mode { kTrain, kEval };

template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, T fill = T(0));

  std::size_t numel() const { return data.size(); }
  int dim(std::size_t i) const { return shape[i]; }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }
};

template <typename T>
struct Param {
  std::string name;
  ParamKind kind = ParamKind::kWeight;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until gradients are first requested
  bool trainable = true;

  std::size_t numel() const { return value.size(); }
  void zero_grad();
  bool wants_grad() const { return trainable && kind != ParamKind::kBnStat; }
};

// 3x3 convolution, stride 1, zero padding 1, no bias. NCHW.
template <typename T>
class Conv3x3 {
 public:
  Conv3x3(std::string name, int in_ch, int out_ch);
  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, bool keep_cache);
  // Returns dx when need_dx, otherwise an empty tensor.
  Tensor<T> backward(const Tensor<T>& dy, bool need_dx);
  Param<T>& weight() { return weight_; }
  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  void clear_cache() { x_ = {}; }

 private:
  int in_, out_;
  Param<T> weight_;
  Tensor<T> x_;
};

// Batch normalisation over one channel axis of a tensor viewed as
// (outer, channels, inner). axis = 1 on NCHW gives per-feature-map
// normalisation; axis = 3 on [N,1,T,M] gives per-mel-band normalisation.
template <typename T>
class BatchNorm {
 public:
  BatchNorm(std::string name, int channels, int axis, double momentum = 0.1, double eps = 1e-5);
  Tensor<T> forward(const Tensor<T>& x, Mode mode, bool keep_cache);
  Tensor<T> backward(const Tensor<T>& dy, bool need_dx);
  Param<T>& gamma() { return gamma_; }
  Param<T>& beta() { return beta_; }
  Param<T>& running_mean() { return mean_; }
  Param<T>& running_var() { return var_; }
  void clear_cache() { xhat_ = {}; }

 private:
  void layout(const Tensor<T>& x, std::size_t& outer, std::size_t& inner) const;

  int channels_, axis_;
  double momentum_, eps_;
  Param<T> gamma_, beta_, mean_, var_;
  Tensor<T> xhat_;
  std::vector<double> inv_std_;
  Mode cached_mode_ = Mode::kEval;
};

// In place; remembers the output sign pattern for backward.
template <typename T>
class Relu {
 public:
  void forward_inplace(Tensor<T>& x, bool keep_cache);
  void backward_inplace(Tensor<T>& dy) const;
  void clear_cache() { mask_.clear(); }

 private:
  std::vector<std::uint8_t> mask_;
};

// 2x2 average pooling with floor semantics on the two trailing axes.
template <typename T>
class AvgPool2x2 {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool keep_cache);
  Tensor<T> backward(const Tensor<T>& dy) const;

 private:
  std::vector<int> in_shape_;
};

// Mean over the two trailing axes: [N,C,H,W] -> [N,C].
template <typename T>
class GlobalMeanPool {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool keep_cache);
  Tensor<T> backward(const Tensor<T>& dy) const;

 private:
  std::vector<int> in_shape_;
};

// y = x W^T + b, x: [N, in].
template <typename T>
class Linear {
 public:
  Linear(std::string name, int in, int out);
  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, bool keep_cache);
  Tensor<T> backward(const Tensor<T>& dy, bool need_dx);
  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  int in_features() const { return in_; }
  int out_features() const { return out_; }
  void clear_cache() { x_ = {}; }

 private:
  int in_, out_;
  Param<T> weight_, bias_;
  Tensor<T> x_;
};

}  // namespace cryssl::nn
