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

#include <map>
#include <span>
#include <string>
#include <vector>

#include "cryssl/layers.hpp"

namespace cryssl {

// Parameters without gradients or with trainable = false are skipped.
// Optimiser state is keyed by parameter name, so an optimiser survives
// copies of the model it drives.
template <typename T>
class Sgd {
 public:
  explicit Sgd(double momentum = 0.9, double weight_decay = 0.0)
      : momentum_(momentum), weight_decay_(weight_decay) {}
  void step(std::span<nn::Param<T>* const> params, double lr);

 private:
  double momentum_, weight_decay_;
  std::map<std::string, std::vector<T>> velocity_;
};

template <typename T>
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(std::span<nn::Param<T>* const> params, double lr);

 private:
  struct State {
    std::vector<double> m, v;
    long t = 0;
  };
  double beta1_, beta2_, eps_;
  std::map<std::string, State> state_;
};

// Cosine decay from `peak` at step 0 to 0 at `total_steps`.
double cosine_lr(double peak, long step, long total_steps);

}  // namespace cryssl
