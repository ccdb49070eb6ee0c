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

#include "cryssl/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cryssl/error.hpp"

namespace cryssl {

void Standardizer::fit(const Eigen::MatrixXd& x) {
  mean = x.colwise().mean();
  scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - mean(j)).square().mean();
    scale(j) = var > 1e-24 ? 1.0 / std::sqrt(var) : 0.0;
  }
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean).array().rowwise() * scale.array();
}

namespace {

void check_fit_args(const Eigen::MatrixXd& x, std::span<const int> y, int k) {
  if (x.rows() != static_cast<Eigen::Index>(y.size()))
    throw ValidationError("classifier: row/label count mismatch");
  if (k < 2) throw ValidationError("classifier: need at least 2 classes");
  for (int v : y)
    if (v < 0 || v >= k) throw ValidationError("classifier: label out of range");
}

Eigen::MatrixXd with_bias(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd a(x.rows(), x.cols() + 1);
  a.leftCols(x.cols()) = x;
  a.col(x.cols()).setOnes();
  return a;
}

// Targets in {-1, +1} for each one-vs-rest problem; K = 2 uses one column.
std::vector<Eigen::VectorXd> ovr_targets(std::span<const int> y, int k) {
  std::vector<Eigen::VectorXd> t;
  const int cols = k == 2 ? 1 : k;
  for (int c = 0; c < cols; ++c) {
    const int pos = k == 2 ? 1 : c;
    Eigen::VectorXd v(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) v(i) = y[i] == pos ? 1.0 : -1.0;
    t.push_back(v);
  }
  return t;
}

Eigen::MatrixXd ovr_scores(const Eigen::MatrixXd& margins, int k) {
  if (k != 2) return margins;
  Eigen::MatrixXd s(margins.rows(), 2);
  s.col(0) = -margins.col(0);
  s.col(1) = margins.col(0);
  return s;
}

Eigen::MatrixXd penalty(Eigen::Index d, double c) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(d + 1, d + 1) / c;
  r(d, d) = 1e-8;
  return r;
}

}  // namespace

void LogisticRegression::fit(const Eigen::MatrixXd& x, std::span<const int> y, int k, Rng&) {
  check_fit_args(x, y, k);
  k_ = k;
  std_.fit(x);
  const Eigen::MatrixXd a = with_bias(std_.apply(x));
  const auto targets = ovr_targets(y, k);
  const Eigen::MatrixXd reg = penalty(x.cols(), c_);
  w_.setZero(a.cols(), static_cast<Eigen::Index>(targets.size()));
  for (std::size_t c = 0; c < targets.size(); ++c) {
    const Eigen::VectorXd t = (targets[c].array() + 1.0) / 2.0;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(a.cols());
    for (int it = 0; it < 50; ++it) {
      const Eigen::VectorXd p2 = (1.0 / (1.0 + (-(a * w).array()).exp())).matrix();
      const Eigen::VectorXd g = a.transpose() * (p2 - t) + reg * w;
      const Eigen::VectorXd s = (p2.array() * (1.0 - p2.array())).matrix();
      const Eigen::MatrixXd h = a.transpose() * s.asDiagonal() * a + reg;
      const Eigen::VectorXd step = h.ldlt().solve(g);
      w -= step;
      if (step.norm() < 1e-9 * (1.0 + w.norm())) break;
    }
    w_.col(static_cast<Eigen::Index>(c)) = w;
  }
}

Eigen::MatrixXd LogisticRegression::scores(const Eigen::MatrixXd& x) const {
  return ovr_scores(with_bias(std_.apply(x)) * w_, k_);
}

void LinearSvm::fit(const Eigen::MatrixXd& x, std::span<const int> y, int k, Rng&) {
  check_fit_args(x, y, k);
  k_ = k;
  std_.fit(x);
  const Eigen::MatrixXd a = with_bias(std_.apply(x));
  const auto targets = ovr_targets(y, k);
  // Minimises 1/2 w'Rw + C sum_i max(0, 1 - t_i a_i w)^2.
  Eigen::MatrixXd reg = Eigen::MatrixXd::Identity(a.cols(), a.cols());
  reg(a.cols() - 1, a.cols() - 1) = 1e-8;
  w_.setZero(a.cols(), static_cast<Eigen::Index>(targets.size()));
  for (std::size_t c = 0; c < targets.size(); ++c) {
    const auto& t = targets[c];
    Eigen::VectorXd w = Eigen::VectorXd::Zero(a.cols());
    std::vector<char> active(a.rows(), 1), prev;
    for (int it = 0; it < 100; ++it) {
      Eigen::MatrixXd h = reg;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(a.cols());
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        if (active[i]) {
          h.noalias() += 2.0 * c_ * a.row(i).transpose() * a.row(i);
          rhs += 2.0 * c_ * t(i) * a.row(i).transpose();
        }
      w = h.ldlt().solve(rhs);
      prev = active;
      const Eigen::VectorXd m = (a * w).cwiseProduct(t);
      for (Eigen::Index i = 0; i < a.rows(); ++i) active[i] = m(i) < 1.0;
      if (active == prev) break;
    }
    w_.col(static_cast<Eigen::Index>(c)) = w;
  }
}

Eigen::MatrixXd LinearSvm::scores(const Eigen::MatrixXd& x) const {
  return ovr_scores(with_bias(std_.apply(x)) * w_, k_);
}

int RandomForest::grow(Tree& tree, const Eigen::MatrixXd& x, std::span<const int> y,
                       std::vector<int>& idx, int depth, Rng& rng) {
  const int node = static_cast<int>(tree.size());
  tree.emplace_back();
  std::vector<double> counts(k_, 0.0);
  for (int i : idx) counts[y[i]] += 1.0;
  const double n = static_cast<double>(idx.size());
  auto gini = [&](const std::vector<double>& cnt, double tot) {
    double g = 1.0;
    for (double v : cnt) g -= (v / tot) * (v / tot);
    return g;
  };
  const double g0 = gini(counts, n);
  const bool stop = g0 <= 0.0 || static_cast<int>(idx.size()) < 2 * min_leaf_ ||
                    (max_depth_ > 0 && depth >= max_depth_);

  int best_f = -1;
  double best_thr = 0.0, best_gain = 1e-12;
  if (!stop) {
    const int d = static_cast<int>(x.cols());
    const int mtry = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(d)))));
    std::vector<int> feats(d);
    std::iota(feats.begin(), feats.end(), 0);
    for (int j = 0; j < mtry; ++j) {
      std::uniform_int_distribution<int> pick(j, d - 1);
      std::swap(feats[j], feats[pick(rng)]);
    }
    std::vector<std::pair<double, int>> col(idx.size());
    for (int j = 0; j < mtry; ++j) {
      const int f = feats[j];
      for (std::size_t i = 0; i < idx.size(); ++i) col[i] = {x(idx[i], f), y[idx[i]]};
      std::sort(col.begin(), col.end());
      std::vector<double> left(k_, 0.0), right = counts;
      for (std::size_t i = 0; i + 1 < col.size(); ++i) {
        left[col[i].second] += 1.0;
        right[col[i].second] -= 1.0;
        if (col[i].first == col[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1), nr = n - nl;
        if (nl < min_leaf_ || nr < min_leaf_) continue;
        const double gain = g0 - (nl / n) * gini(left, nl) - (nr / n) * gini(right, nr);
        if (gain > best_gain) {
          best_gain = gain;
          best_f = f;
          best_thr = 0.5 * (col[i].first + col[i + 1].first);
          if (!(best_thr < col[i + 1].first)) best_thr = col[i].first;
        }
      }
    }
  }
  if (best_f < 0) {
    for (double& v : counts) v /= n;
    tree[node].proba = counts;
    return node;
  }
  std::vector<int> li, ri;
  for (int i : idx) (x(i, best_f) <= best_thr ? li : ri).push_back(i);
  tree[node].feature = best_f;
  tree[node].threshold = best_thr;
  const int l = grow(tree, x, y, li, depth + 1, rng);
  const int r = grow(tree, x, y, ri, depth + 1, rng);
  tree[node].left = l;
  tree[node].right = r;
  return node;
}

void RandomForest::fit(const Eigen::MatrixXd& x, std::span<const int> y, int k, Rng& rng) {
  check_fit_args(x, y, k);
  if (x.rows() == 0) throw ValidationError("random forest: no training rows");
  k_ = k;
  forest_.clear();
  std::uniform_int_distribution<int> boot(0, static_cast<int>(x.rows()) - 1);
  for (int t = 0; t < trees_; ++t) {
    std::vector<int> idx(x.rows());
    for (auto& i : idx) i = boot(rng);
    Tree tree;
    grow(tree, x, y, idx, 0, rng);
    forest_.push_back(std::move(tree));
  }
}

Eigen::MatrixXd RandomForest::scores(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.rows(), k_);
  for (const auto& tree : forest_)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      int n = 0;
      while (tree[n].feature >= 0) n = x(i, tree[n].feature) <= tree[n].threshold ? tree[n].left : tree[n].right;
      for (int c = 0; c < k_; ++c) s(i, c) += tree[n].proba[c];
    }
  return s / static_cast<double>(std::max<std::size_t>(1, forest_.size()));
}

}  // namespace cryssl
