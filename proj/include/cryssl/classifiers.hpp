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

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <vector>

#include "cryssl/util.hpp"

namespace cryssl {

// Per-column z-scoring fitted on training rows; constant columns map to 0.
struct Standardizer {
  Eigen::RowVectorXd mean, scale;

  void fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const Eigen::MatrixXd& x, std::span<const int> y, int num_classes, Rng& rng) = 0;
  // N x K scores; larger means more likely.
  virtual Eigen::MatrixXd scores(const Eigen::MatrixXd& x) const = 0;
};

// L2-regularised logistic regression (penalty 1 / (2C) |w|^2, bias
// unpenalised), Newton iterations; one-vs-rest for K > 2.
class LogisticRegression : public Classifier {
 public:
  explicit LogisticRegression(double c = 1.0) : c_(c) {}
  void fit(const Eigen::MatrixXd& x, std::span<const int> y, int num_classes, Rng& rng) override;
  Eigen::MatrixXd scores(const Eigen::MatrixXd& x) const override;

 private:
  double c_;
  Standardizer std_;
  Eigen::MatrixXd w_;  // (d + 1) x K', last row bias
  int k_ = 2;
};

// L2-regularised squared-hinge linear SVM, primal Newton (active set);
// one-vs-rest for K > 2.
class LinearSvm : public Classifier {
 public:
  explicit LinearSvm(double c = 1.0) : c_(c) {}
  void fit(const Eigen::MatrixXd& x, std::span<const int> y, int num_classes, Rng& rng) override;
  Eigen::MatrixXd scores(const Eigen::MatrixXd& x) const override;

 private:
  double c_;
  Standardizer std_;
  Eigen::MatrixXd w_;
  int k_ = 2;
};

// CART trees (Gini), bootstrap samples, sqrt(d) candidate features per
// split. Scores are mean leaf class frequencies.
class RandomForest : public Classifier {
 public:
  RandomForest(int trees = 100, int max_depth = 0, int min_leaf = 1)
      : trees_(trees), max_depth_(max_depth), min_leaf_(min_leaf) {}
  void fit(const Eigen::MatrixXd& x, std::span<const int> y, int num_classes, Rng& rng) override;
  Eigen::MatrixXd scores(const Eigen::MatrixXd& x) const override;

 private:
  struct Node {
    int feature = -1;  // -1: leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    std::vector<double> proba;
  };
  using Tree = std::vector<Node>;

  int grow(Tree& tree, const Eigen::MatrixXd& x, std::span<const int> y, std::vector<int>& idx,
           int depth, Rng& rng);

  int trees_, max_depth_, min_leaf_;
  int k_ = 2;
  std::vector<Tree> forest_;
};

}  // namespace cryssl
