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

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "cryssl/error.hpp"
#include "cryssl/layers.hpp"

using namespace cryssl;
using namespace cryssl::nn;

namespace {

Tensor<double> random_tensor(std::vector<int> shape, std::mt19937_64& rng) {
  Tensor<double> t(std::move(shape));
  std::normal_distribution<double> g;
  for (auto& v : t.data) v = g(rng);
  return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a.data[i] * b.data[i];
  return s;
}

// Relative L2 error between an analytic gradient and central differences of
// f over the entries of `x`.
double fd_error(std::vector<double>& x, const std::vector<double>& analytic,
                const std::function<double()>& f, double h = 1e-5) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f();
    x[i] = keep - h;
    const double down = f();
    x[i] = keep;
    const double fd = (up - down) / (2 * h);
    num += (fd - analytic[i]) * (fd - analytic[i]);
    den += fd * fd;
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

}  // namespace

TEST_CASE("conv3x3 gradients") {
  std::mt19937_64 rng(1);
  Conv3x3<double> conv("c", 2, 3);
  Rng init(2);
  conv.init(init);
  auto x = random_tensor({2, 2, 5, 4}, rng);
  auto w = random_tensor({2, 3, 5, 4}, rng);
  auto loss = [&] { return dot(conv.forward(x, false), w); };
  conv.forward(x, true);
  conv.weight().zero_grad();
  auto dx = conv.backward(w, true);
  CHECK(fd_error(x.data, dx.data, loss) < 1e-6);
  CHECK(fd_error(conv.weight().value, conv.weight().grad, loss) < 1e-6);
}

TEST_CASE("conv3x3 matches a direct convolution") {
  std::mt19937_64 rng(3);
  Conv3x3<double> conv("c", 1, 1);
  conv.weight().value = {0, 0, 0, 0, 1, 0, 0, 0, 0};
  auto x = random_tensor({1, 1, 4, 4}, rng);
  CHECK(conv.forward(x, false).data == x.data);
  conv.weight().value.assign(9, 1.0);
  auto y = conv.forward(x, false);
  // Corner sees a 2x2 neighbourhood under zero padding.
  CHECK(y.data[0] == doctest::Approx(x.data[0] + x.data[1] + x.data[4] + x.data[5]));
}

TEST_CASE("batch norm train-mode gradients") {
  std::mt19937_64 rng(4);
  for (int axis : {1, 3}) {
    const int channels = axis == 1 ? 3 : 5;
    BatchNorm<double> bn("bn", channels, axis);
    bn.gamma().value = {1.5, -0.7, 0.9, 1.1, 0.3};
    bn.gamma().value.resize(static_cast<std::size_t>(channels));
    bn.beta().value.assign(static_cast<std::size_t>(channels), 0.2);
    auto x = random_tensor({3, axis == 1 ? 3 : 1, 4, 5}, rng);
    auto w = random_tensor(x.shape, rng);
    auto loss = [&] { return dot(bn.forward(x, Mode::kTrain, false), w); };
    bn.forward(x, Mode::kTrain, true);
    bn.gamma().zero_grad();
    bn.beta().zero_grad();
    auto dx = bn.backward(w, true);
    CHECK(fd_error(x.data, dx.data, loss) < 1e-6);
    CHECK(fd_error(bn.gamma().value, bn.gamma().grad, loss) < 1e-6);
    CHECK(fd_error(bn.beta().value, bn.beta().grad, loss) < 1e-6);
  }
}

TEST_CASE("batch norm running statistics") {
  BatchNorm<double> bn("bn", 1, 1, 0.1);
  Tensor<double> x({4, 1, 1, 1});
  x.data = {1, 2, 3, 4};
  bn.forward(x, Mode::kTrain, false);
  CHECK(bn.running_mean().value[0] == doctest::Approx(0.25));
  CHECK(bn.running_var().value[0] == doctest::Approx(0.9 + 0.1 * 5.0 / 3.0));
  const auto mean = bn.running_mean().value;
  bn.forward(x, Mode::kEval, false);
  CHECK(bn.running_mean().value == mean);
  Tensor<double> single({1, 1, 1, 1});
  CHECK_THROWS_AS(bn.forward(single, Mode::kTrain, false), ShapeError);
}

TEST_CASE("linear gradients") {
  std::mt19937_64 rng(5);
  Linear<double> fc("fc", 6, 4);
  Rng init(6);
  fc.init(init);
  auto x = random_tensor({3, 6}, rng);
  auto w = random_tensor({3, 4}, rng);
  auto loss = [&] { return dot(fc.forward(x, false), w); };
  fc.forward(x, true);
  fc.weight().zero_grad();
  fc.bias().zero_grad();
  auto dx = fc.backward(w, true);
  CHECK(fd_error(x.data, dx.data, loss) < 1e-7);
  CHECK(fd_error(fc.weight().value, fc.weight().grad, loss) < 1e-7);
  CHECK(fd_error(fc.bias().value, fc.bias().grad, loss) < 1e-7);
}

TEST_CASE("frozen parameters receive no gradient") {
  std::mt19937_64 rng(7);
  Linear<double> fc("fc", 3, 2);
  fc.weight().trainable = false;
  auto x = random_tensor({2, 3}, rng);
  fc.forward(x, true);
  fc.backward(random_tensor({2, 2}, rng), false);
  CHECK(fc.weight().grad.empty());
  CHECK(fc.bias().grad.size() == 2);
}

TEST_CASE("pooling and relu") {
  std::mt19937_64 rng(8);
  AvgPool2x2<double> pool;
  auto x = random_tensor({1, 2, 5, 3}, rng);
  auto y = pool.forward(x, true);
  CHECK(y.shape == std::vector<int>{1, 2, 2, 1});
  CHECK(y.data[0] == doctest::Approx((x.data[0] + x.data[1] + x.data[3] + x.data[4]) / 4));
  auto w = random_tensor(y.shape, rng);
  CHECK(fd_error(x.data, pool.backward(w).data, [&] { return dot(pool.forward(x, false), w); }) < 1e-8);

  GlobalMeanPool<double> gmp;
  auto g = gmp.forward(x, true);
  CHECK(g.shape == std::vector<int>{1, 2});
  auto wg = random_tensor(g.shape, rng);
  CHECK(fd_error(x.data, gmp.backward(wg).data, [&] { return dot(gmp.forward(x, false), wg); }) < 1e-8);

  Relu<double> relu;
  Tensor<double> r({4});
  r.data = {-1, 2, 0, 3};
  relu.forward_inplace(r, true);
  CHECK(r.data == std::vector<double>{0, 2, 0, 3});
  Tensor<double> dr({4}, 1.0);
  relu.backward_inplace(dr);
  CHECK(dr.data == std::vector<double>{0, 1, 0, 1});
}
