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

#include "cryssl/optim.hpp"

#include <cmath>
#include <numbers>

namespace cryssl {

template <typename T>
void Sgd<T>::step(std::span<nn::Param<T>* const> params, double lr) {
  for (auto* p : params) {
    if (!p->wants_grad() || p->grad.size() != p->value.size()) continue;
    auto& vel = velocity_[p->name];
    if (vel.size() != p->value.size()) vel.assign(p->value.size(), T(0));
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i] + weight_decay_ * p->value[i];
      vel[i] = static_cast<T>(momentum_ * vel[i] + g);
      p->value[i] = static_cast<T>(p->value[i] - lr * vel[i]);
    }
  }
}

template <typename T>
void Adam<T>::step(std::span<nn::Param<T>* const> params, double lr) {
  for (auto* p : params) {
    if (!p->wants_grad() || p->grad.size() != p->value.size()) continue;
    auto& s = state_[p->name];
    if (s.m.size() != p->value.size()) {
      s.m.assign(p->value.size(), 0.0);
      s.v.assign(p->value.size(), 0.0);
    }
    ++s.t;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(s.t));
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * g;
      s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * g * g;
      const double mhat = s.m[i] / c1, vhat = s.v[i] / c2;
      p->value[i] = static_cast<T>(p->value[i] - lr * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

double cosine_lr(double peak, long step, long total_steps) {
  if (total_steps <= 0) return peak;
  const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
  return peak * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

template class Sgd<float>;
template class Sgd<double>;
template class Adam<float>;
template class Adam<double>;

}  // namespace cryssl
