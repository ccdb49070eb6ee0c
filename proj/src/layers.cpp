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

#include "cryssl/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "cryssl/error.hpp"

namespace cryssl::nn {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

// col: (C*9) x (H*W)
template <typename T>
void im2col3x3(const T* x, int c_in, int h, int w, T* col) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < c_in; ++c) {
    const T* xc = x + static_cast<std::size_t>(c) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = col + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * hw;
        for (int r = 0; r < h; ++r) {
          T* drow = dst + static_cast<std::size_t>(r) * w;
          const int sr = r + ky - 1;
          if (sr < 0 || sr >= h) {
            std::fill(drow, drow + w, T(0));
            continue;
          }
          const T* srow = xc + static_cast<std::size_t>(sr) * w;
          if (kx == 1) {
            std::memcpy(drow, srow, sizeof(T) * w);
          } else if (kx == 0) {
            drow[0] = T(0);
            std::memcpy(drow + 1, srow, sizeof(T) * (w - 1));
          } else {
            std::memcpy(drow, srow + 1, sizeof(T) * (w - 1));
            drow[w - 1] = T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im3x3(const T* col, int c_in, int h, int w, T* dx) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < c_in; ++c) {
    T* xc = dx + static_cast<std::size_t>(c) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = col + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * hw;
        for (int r = 0; r < h; ++r) {
          const int sr = r + ky - 1;
          if (sr < 0 || sr >= h) continue;
          const T* crow = src + static_cast<std::size_t>(r) * w;
          T* xrow = xc + static_cast<std::size_t>(sr) * w;
          if (kx == 1) {
            for (int i = 0; i < w; ++i) xrow[i] += crow[i];
          } else if (kx == 0) {
            for (int i = 1; i < w; ++i) xrow[i - 1] += crow[i];
          } else {
            for (int i = 0; i + 1 < w; ++i) xrow[i + 1] += crow[i];
          }
        }
      }
    }
  }
}

template <typename T>
void kaiming_uniform(std::vector<T>& v, int fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& x : v) x = static_cast<T>(u(rng));
}

template <typename T>
Param<T> make_param(std::string name, ParamKind kind, std::vector<int> shape, T fill) {
  Param<T> p;
  p.name = std::move(name);
  p.kind = kind;
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  p.shape = std::move(shape);
  p.value.assign(n, fill);
  return p;
}

}  // namespace

std::string_view to_string(ParamKind k) {
  switch (k) {
    case ParamKind::kWeight: return "weight";
    case ParamKind::kBnAffine: return "bn_affine";
    case ParamKind::kBnStat: return "bn_stat";
  }
  return "?";
}

template <typename T>
Tensor<T>::Tensor(std::vector<int> s, T fill) : shape(std::move(s)) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  data.assign(n, fill);
}

template <typename T>
void Param<T>::zero_grad() {
  grad.assign(value.size(), T(0));
}

// ---------------------------------------------------------------- Conv3x3

template <typename T>
Conv3x3<T>::Conv3x3(std::string name, int in_ch, int out_ch)
    : in_(in_ch),
      out_(out_ch),
      weight_(make_param<T>(std::move(name), ParamKind::kWeight, {out_ch, in_ch, 3, 3}, T(0))) {}

template <typename T>
void Conv3x3<T>::init(Rng& rng) {
  kaiming_uniform(weight_.value, in_ * 9, rng);
}

template <typename T>
Tensor<T> Conv3x3<T>::forward(const Tensor<T>& x, bool keep_cache) {
  if (x.shape.size() != 4 || x.dim(1) != in_)
    throw ShapeError(weight_.name + ": expected [N," + std::to_string(in_) + ",H,W], got " +
                     shape_str(x.shape));
  const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  Tensor<T> y({n, out_, h, w});
  std::vector<T> col(static_cast<std::size_t>(in_) * 9 * hw);
  CMapR<T> wm(weight_.value.data(), out_, in_ * 9);
  for (int b = 0; b < n; ++b) {
    im2col3x3(x.ptr() + static_cast<std::size_t>(b) * in_ * hw, in_, h, w, col.data());
    CMapR<T> cm(col.data(), in_ * 9, static_cast<Eigen::Index>(hw));
    MapR<T> ym(y.ptr() + static_cast<std::size_t>(b) * out_ * hw, out_, static_cast<Eigen::Index>(hw));
    ym.noalias() = wm * cm;
  }
  if (keep_cache) x_ = x;
  return y;
}

template <typename T>
Tensor<T> Conv3x3<T>::backward(const Tensor<T>& dy, bool need_dx) {
  if (x_.data.empty()) throw Error(weight_.name + ": backward without cached forward");
  const int n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  const bool want_w = weight_.wants_grad();
  if (want_w && weight_.grad.size() != weight_.value.size()) weight_.zero_grad();
  Tensor<T> dx;
  if (need_dx) dx = Tensor<T>({n, in_, h, w});
  if (!want_w && !need_dx) return dx;
  std::vector<T> col(static_cast<std::size_t>(in_) * 9 * hw);
  CMapR<T> wm(weight_.value.data(), out_, in_ * 9);
  for (int b = 0; b < n; ++b) {
    CMapR<T> dym(dy.ptr() + static_cast<std::size_t>(b) * out_ * hw, out_, static_cast<Eigen::Index>(hw));
    if (want_w) {
      im2col3x3(x_.ptr() + static_cast<std::size_t>(b) * in_ * hw, in_, h, w, col.data());
      CMapR<T> cm(col.data(), in_ * 9, static_cast<Eigen::Index>(hw));
      MapR<T> gw(weight_.grad.data(), out_, in_ * 9);
      gw.noalias() += dym * cm.transpose();
    }
    if (need_dx) {
      MapR<T> dcol(col.data(), in_ * 9, static_cast<Eigen::Index>(hw));
      dcol.noalias() = wm.transpose() * dym;
      col2im3x3(col.data(), in_, h, w, dx.ptr() + static_cast<std::size_t>(b) * in_ * hw);
    }
  }
  return dx;
}

// ---------------------------------------------------------------- BatchNorm

template <typename T>
BatchNorm<T>::BatchNorm(std::string name, int channels, int axis, double momentum, double eps)
    : channels_(channels),
      axis_(axis),
      momentum_(momentum),
      eps_(eps),
      gamma_(make_param<T>(name + ".weight", ParamKind::kBnAffine, {channels}, T(1))),
      beta_(make_param<T>(name + ".bias", ParamKind::kBnAffine, {channels}, T(0))),
      mean_(make_param<T>(name + ".running_mean", ParamKind::kBnStat, {channels}, T(0))),
      var_(make_param<T>(name + ".running_var", ParamKind::kBnStat, {channels}, T(1))) {
  mean_.trainable = false;
  var_.trainable = false;
}

template <typename T>
void BatchNorm<T>::layout(const Tensor<T>& x, std::size_t& outer, std::size_t& inner) const {
  if (axis_ < 0 || static_cast<std::size_t>(axis_) >= x.shape.size() || x.dim(axis_) != channels_)
    throw ShapeError(gamma_.name + ": channel axis mismatch for input " + shape_str(x.shape));
  outer = 1;
  inner = 1;
  for (int i = 0; i < axis_; ++i) outer *= static_cast<std::size_t>(x.dim(i));
  for (std::size_t i = static_cast<std::size_t>(axis_) + 1; i < x.shape.size(); ++i)
    inner *= static_cast<std::size_t>(x.dim(i));
}

template <typename T>
Tensor<T> BatchNorm<T>::forward(const Tensor<T>& x, Mode mode, bool keep_cache) {
  std::size_t outer, inner;
  layout(x, outer, inner);
  const std::size_t c_n = static_cast<std::size_t>(channels_);
  const std::size_t m = outer * inner;
  Tensor<T> y(x.shape);
  if (keep_cache) xhat_ = Tensor<T>(x.shape);
  inv_std_.assign(c_n, 0.0);
  cached_mode_ = mode;
  for (std::size_t c = 0; c < c_n; ++c) {
    double mu, var;
    if (mode == Mode::kTrain) {
      if (m < 2) throw ShapeError(gamma_.name + ": batch statistics need at least 2 values");
      double s = 0.0;
      for (std::size_t o = 0; o < outer; ++o) {
        const T* p = x.ptr() + (o * c_n + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) s += p[i];
      }
      mu = s / static_cast<double>(m);
      double ss = 0.0;
      for (std::size_t o = 0; o < outer; ++o) {
        const T* p = x.ptr() + (o * c_n + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) {
          const double d = p[i] - mu;
          ss += d * d;
        }
      }
      var = ss / static_cast<double>(m);
      const double unbiased = ss / static_cast<double>(m - 1);
      mean_.value[c] = static_cast<T>((1.0 - momentum_) * mean_.value[c] + momentum_ * mu);
      var_.value[c] = static_cast<T>((1.0 - momentum_) * var_.value[c] + momentum_ * unbiased);
    } else {
      mu = mean_.value[c];
      var = var_.value[c];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = inv;
    const double g = gamma_.value[c], b = beta_.value[c];
    for (std::size_t o = 0; o < outer; ++o) {
      const std::size_t off = (o * c_n + c) * inner;
      const T* p = x.ptr() + off;
      T* q = y.ptr() + off;
      T* xh = keep_cache ? xhat_.ptr() + off : nullptr;
      for (std::size_t i = 0; i < inner; ++i) {
        const T v = static_cast<T>((p[i] - mu) * inv);
        if (xh) xh[i] = v;
        q[i] = static_cast<T>(g * v + b);
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm<T>::backward(const Tensor<T>& dy, bool need_dx) {
  if (xhat_.data.empty()) throw Error(gamma_.name + ": backward without cached forward");
  std::size_t outer, inner;
  layout(dy, outer, inner);
  const std::size_t c_n = static_cast<std::size_t>(channels_);
  const double m = static_cast<double>(outer * inner);
  const bool want_g = gamma_.wants_grad(), want_b = beta_.wants_grad();
  if (want_g && gamma_.grad.size() != c_n) gamma_.zero_grad();
  if (want_b && beta_.grad.size() != c_n) beta_.zero_grad();
  Tensor<T> dx;
  if (need_dx) dx = Tensor<T>(dy.shape);
  for (std::size_t c = 0; c < c_n; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t o = 0; o < outer; ++o) {
      const std::size_t off = (o * c_n + c) * inner;
      const T* d = dy.ptr() + off;
      const T* xh = xhat_.ptr() + off;
      for (std::size_t i = 0; i < inner; ++i) {
        sum_dy += d[i];
        sum_dy_xhat += static_cast<double>(d[i]) * xh[i];
      }
    }
    if (want_g) gamma_.grad[c] += static_cast<T>(sum_dy_xhat);
    if (want_b) beta_.grad[c] += static_cast<T>(sum_dy);
    if (!need_dx) continue;
    const double g = gamma_.value[c], inv = inv_std_[c];
    for (std::size_t o = 0; o < outer; ++o) {
      const std::size_t off = (o * c_n + c) * inner;
      const T* d = dy.ptr() + off;
      const T* xh = xhat_.ptr() + off;
      T* out = dx.ptr() + off;
      if (cached_mode_ == Mode::kTrain) {
        for (std::size_t i = 0; i < inner; ++i)
          out[i] = static_cast<T>(g * inv / m * (m * d[i] - sum_dy - xh[i] * sum_dy_xhat));
      } else {
        for (std::size_t i = 0; i < inner; ++i) out[i] = static_cast<T>(g * inv * d[i]);
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------- Relu

template <typename T>
void Relu<T>::forward_inplace(Tensor<T>& x, bool keep_cache) {
  if (keep_cache) mask_.resize(x.numel());
  T* p = x.ptr();
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const bool on = p[i] > T(0);
    if (!on) p[i] = T(0);
    if (keep_cache) mask_[i] = on;
  }
}

template <typename T>
void Relu<T>::backward_inplace(Tensor<T>& dy) const {
  if (mask_.size() != dy.numel()) throw Error("relu: backward without cached forward");
  T* p = dy.ptr();
  for (std::size_t i = 0; i < dy.numel(); ++i)
    if (!mask_[i]) p[i] = T(0);
}

// ---------------------------------------------------------------- pooling

template <typename T>
Tensor<T> AvgPool2x2<T>::forward(const Tensor<T>& x, bool keep_cache) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int ho = h / 2, wo = w / 2;
  if (ho < 1 || wo < 1)
    throw ShapeError("avg_pool: input " + shape_str(x.shape) + " too small for 2x2 pooling");
  Tensor<T> y({n, c, ho, wo});
  for (int p = 0; p < n * c; ++p) {
    const T* src = x.ptr() + static_cast<std::size_t>(p) * h * w;
    T* dst = y.ptr() + static_cast<std::size_t>(p) * ho * wo;
    for (int r = 0; r < ho; ++r) {
      const T* a = src + static_cast<std::size_t>(2 * r) * w;
      const T* b = a + w;
      for (int k = 0; k < wo; ++k)
        dst[r * wo + k] = (a[2 * k] + a[2 * k + 1] + b[2 * k] + b[2 * k + 1]) * T(0.25);
    }
  }
  if (keep_cache) in_shape_ = x.shape;
  return y;
}

template <typename T>
Tensor<T> AvgPool2x2<T>::backward(const Tensor<T>& dy) const {
  if (in_shape_.empty()) throw Error("avg_pool: backward without cached forward");
  Tensor<T> dx(in_shape_);
  const int n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
  const int ho = h / 2, wo = w / 2;
  for (int p = 0; p < n * c; ++p) {
    const T* src = dy.ptr() + static_cast<std::size_t>(p) * ho * wo;
    T* dst = dx.ptr() + static_cast<std::size_t>(p) * h * w;
    for (int r = 0; r < ho; ++r) {
      T* a = dst + static_cast<std::size_t>(2 * r) * w;
      T* b = a + w;
      for (int k = 0; k < wo; ++k) {
        const T g = src[r * wo + k] * T(0.25);
        a[2 * k] = g;
        a[2 * k + 1] = g;
        b[2 * k] = g;
        b[2 * k + 1] = g;
      }
    }
  }
  return dx;
}

template <typename T>
Tensor<T> GlobalMeanPool<T>::forward(const Tensor<T>& x, bool keep_cache) {
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  Tensor<T> y({n, c});
  for (int p = 0; p < n * c; ++p) {
    const T* src = x.ptr() + static_cast<std::size_t>(p) * hw;
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i) s += src[i];
    y.data[static_cast<std::size_t>(p)] = static_cast<T>(s / static_cast<double>(hw));
  }
  if (keep_cache) in_shape_ = x.shape;
  return y;
}

template <typename T>
Tensor<T> GlobalMeanPool<T>::backward(const Tensor<T>& dy) const {
  if (in_shape_.empty()) throw Error("global_pool: backward without cached forward");
  Tensor<T> dx(in_shape_);
  const std::size_t hw = static_cast<std::size_t>(in_shape_[2]) * in_shape_[3];
  const T scale = T(1) / static_cast<T>(hw);
  for (std::size_t p = 0; p < dy.numel(); ++p)
    std::fill_n(dx.ptr() + p * hw, hw, dy.data[p] * scale);
  return dx;
}

// ---------------------------------------------------------------- Linear

template <typename T>
Linear<T>::Linear(std::string name, int in, int out)
    : in_(in),
      out_(out),
      weight_(make_param<T>(name + ".weight", ParamKind::kWeight, {out, in}, T(0))),
      bias_(make_param<T>(name + ".bias", ParamKind::kWeight, {out}, T(0))) {}

template <typename T>
void Linear<T>::init(Rng& rng) {
  kaiming_uniform(weight_.value, in_, rng);
  std::fill(bias_.value.begin(), bias_.value.end(), T(0));
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x, bool keep_cache) {
  if (x.shape.size() != 2 || x.dim(1) != in_)
    throw ShapeError(weight_.name + ": expected [N," + std::to_string(in_) + "], got " +
                     shape_str(x.shape));
  const int n = x.dim(0);
  Tensor<T> y({n, out_});
  CMapR<T> xm(x.ptr(), n, in_);
  CMapR<T> wm(weight_.value.data(), out_, in_);
  MapR<T> ym(y.ptr(), n, out_);
  ym.noalias() = xm * wm.transpose();
  for (int b = 0; b < n; ++b)
    for (int o = 0; o < out_; ++o) ym(b, o) += bias_.value[static_cast<std::size_t>(o)];
  if (keep_cache) x_ = x;
  return y;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& dy, bool need_dx) {
  if (x_.data.empty()) throw Error(weight_.name + ": backward without cached forward");
  const int n = x_.dim(0);
  CMapR<T> dym(dy.ptr(), n, out_);
  if (weight_.wants_grad()) {
    if (weight_.grad.size() != weight_.value.size()) weight_.zero_grad();
    MapR<T> gw(weight_.grad.data(), out_, in_);
    CMapR<T> xm(x_.ptr(), n, in_);
    gw.noalias() += dym.transpose() * xm;
  }
  if (bias_.wants_grad()) {
    if (bias_.grad.size() != bias_.value.size()) bias_.zero_grad();
    for (int b = 0; b < n; ++b)
      for (int o = 0; o < out_; ++o) bias_.grad[static_cast<std::size_t>(o)] += dym(b, o);
  }
  Tensor<T> dx;
  if (need_dx) {
    dx = Tensor<T>({n, in_});
    MapR<T> dxm(dx.ptr(), n, in_);
    CMapR<T> wm(weight_.value.data(), out_, in_);
    dxm.noalias() = dym * wm;
  }
  return dx;
}

template struct Tensor<float>;
template struct Tensor<double>;
template struct Param<float>;
template struct Param<double>;
template class Conv3x3<float>;
template class Conv3x3<double>;
template class BatchNorm<float>;
template class BatchNorm<double>;
template class Relu<float>;
template class Relu<double>;
template class AvgPool2x2<float>;
template class AvgPool2x2<double>;
template class GlobalMeanPool<float>;
template class GlobalMeanPool<double>;
template class Linear<float>;
template class Linear<double>;

}  // namespace cryssl::nn
