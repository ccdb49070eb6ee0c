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
#include <map>
#include <random>
#include <set>

#include "cryssl/baseline.hpp"
#include "cryssl/classifiers.hpp"
#include "cryssl/error.hpp"
#include "cryssl/metrics.hpp"

using namespace cryssl;

namespace {

struct Toy {
  Eigen::MatrixXd x;
  std::vector<int> y;
  std::vector<std::string> groups;
};

// `groups` groups of `per_group` rows; class = group % k, class mean shifted
// by `shift` along the first feature.
Toy blobs(int groups, int per_group, int k, double shift, std::uint64_t seed, int dim = 5) {
  Toy t;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  t.x.resize(groups * per_group, dim);
  for (int gi = 0; gi < groups; ++gi)
    for (int r = 0; r < per_group; ++r) {
      const int row = gi * per_group + r;
      const int c = gi % k;
      for (int j = 0; j < dim; ++j) t.x(row, j) = g(rng);
      t.x(row, c % dim) += shift;
      t.y.push_back(c);
      t.groups.push_back("g" + std::to_string(gi));
    }
  return t;
}

double auc_of(const Classifier& clf, const Toy& t, int k) {
  Eigen::MatrixXd s = clf.scores(t.x);
  std::vector<double> flat(static_cast<std::size_t>(s.size()));
  for (int i = 0; i < s.rows(); ++i)
    for (int c = 0; c < k; ++c) flat[static_cast<std::size_t>(i * k + c)] = s(i, c);
  return macro_ovr_auc(flat, t.y, k);
}

}  // namespace

TEST_CASE("standardizer") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  Standardizer s;
  s.fit(x);
  auto z = s.apply(x);
  CHECK(z(0, 0) == doctest::Approx(-std::sqrt(1.5)));  // population scale
  CHECK(z(2, 0) == doctest::Approx(std::sqrt(1.5)));
  CHECK(z.col(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("classifiers separate shifted blobs") {
  for (int k : {2, 3}) {
    auto train = blobs(30, 4, k, 3.0, 1);
    auto test = blobs(30, 4, k, 3.0, 2);
    Rng rng(3);
    LogisticRegression lr(1.0);
    lr.fit(train.x, train.y, k, rng);
    CHECK(auc_of(lr, test, k) > 0.95);
    LinearSvm svm(1.0);
    svm.fit(train.x, train.y, k, rng);
    CHECK(auc_of(svm, test, k) > 0.95);
    RandomForest rf(50, 0);
    rf.fit(train.x, train.y, k, rng);
    CHECK(auc_of(rf, test, k) > 0.95);
    CHECK(rf.scores(test.x).rows() == test.x.rows());
    CHECK(rf.scores(test.x).cols() == k);
  }
}

TEST_CASE("logistic regression satisfies its optimality condition") {
  // Unstandardised copy of the objective: features are already z-scored, so
  // the fitted model's scores let us recover the gradient in closed form.
  auto t = blobs(20, 3, 2, 1.0, 4, 3);
  Standardizer s;
  s.fit(t.x);
  Eigen::MatrixXd z = s.apply(t.x);
  Rng rng(1);
  const double c = 0.1;
  LogisticRegression lr(c);
  lr.fit(z, t.y, 2, rng);
  const Eigen::MatrixXd m = lr.scores(z);  // [-m, m] margins
  Eigen::VectorXd resid(z.rows());
  for (int i = 0; i < z.rows(); ++i) resid(i) = 1.0 / (1.0 + std::exp(-m(i, 1))) - t.y[i];
  // d/db: sum resid = 0. d/dw: X^T resid + w / C = 0, so X^T resid lies in
  // the span of w, which is the row space of the margin's linear map.
  CHECK(std::abs(resid.sum()) < 1e-6);
  Eigen::MatrixXd design(z.rows(), z.cols() + 1);
  design << z, Eigen::VectorXd::Ones(z.rows());
  Eigen::VectorXd coef = design.colPivHouseholderQr().solve(m.col(1));
  Eigen::VectorXd w = coef.head(z.cols());
  Eigen::VectorXd grad = z.transpose() * resid + w / c;
  CHECK(grad.norm() < 1e-5);
}

TEST_CASE("random forest is deterministic per seed") {
  auto t = blobs(10, 3, 2, 2.0, 5);
  RandomForest a(20), b(20);
  Rng r1(7), r2(7);
  a.fit(t.x, t.y, 2, r1);
  b.fit(t.x, t.y, 2, r2);
  CHECK(a.scores(t.x) == b.scores(t.x));
}

TEST_CASE("grouped stratified folds") {
  auto t = blobs(23, 3, 2, 0.0, 6);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto fold = group_kfold(t.groups, t.y, 2, 5, seed);
    REQUIRE(fold.size() == t.y.size());
    std::map<std::string, std::set<int>> per_group;
    std::map<int, std::map<int, int>> class_groups;
    for (std::size_t i = 0; i < fold.size(); ++i) {
      CHECK(fold[i] >= 0);
      CHECK(fold[i] < 5);
      per_group[t.groups[i]].insert(fold[i]);
    }
    for (const auto& [g, f] : per_group) CHECK(f.size() == 1);
    for (int gi = 0; gi < 23; ++gi) ++class_groups[fold[static_cast<std::size_t>(gi * 3)]][gi % 2];
    for (const auto& [f, counts] : class_groups)
      for (const auto& [c, n] : counts) CHECK(n >= 2);  // 12 and 11 groups over 5 folds
  }
  CHECK_THROWS_AS(group_kfold(t.groups, t.y, 2, 30, 0), ValidationError);
}

TEST_CASE("group label permutation") {
  auto t = blobs(12, 3, 2, 0.0, 7);
  auto p = permute_group_labels(t.groups, t.y, 3);
  std::map<std::string, std::set<int>> per_group;
  int ones = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    per_group[t.groups[i]].insert(p[i]);
    ones += p[i];
  }
  for (const auto& [g, s] : per_group) CHECK(s.size() == 1);
  CHECK(ones == 18);
  CHECK(permute_group_labels(t.groups, t.y, 3) == p);
}

TEST_CASE("cross-validated AUC and model selection") {
  auto sep = blobs(20, 3, 2, 3.0, 8);
  auto fold = group_kfold(sep.groups, sep.y, 2, 5, 1);
  ModelCandidate lr;
  CHECK(cv_auc(sep.x, sep.y, 2, fold, lr, 1) > 0.95);

  auto grid = default_model_grid();
  CHECK(grid.size() == 8);
  auto sel = select_model(sep.x, sep.y, 2, sep.groups, 5, 1, grid);
  CHECK(sel.table.size() == grid.size());
  CHECK(sel.cv_auc > 0.95);
  double best = 0.0;
  for (const auto& [cand, auc] : sel.table) best = std::max(best, auc);
  CHECK(sel.cv_auc == best);

  auto noise = blobs(20, 3, 2, 0.0, 9);
  std::vector<ModelCandidate> small{ModelCandidate{}};
  auto null = permutation_null(noise.x, noise.y, 2, noise.groups, 5, 2, 10, small);
  CHECK(null.cv_aucs.size() == 10);
  CHECK(std::abs(null.mean - 0.5) < 0.15);
}

TEST_CASE("candidates build the right classifier") {
  ModelCandidate c;
  c.family = ModelFamily::kRandomForest;
  c.max_depth = 4;
  CHECK(dynamic_cast<RandomForest*>(c.make().get()) != nullptr);
  CHECK(c.to_json()["family"] == std::string(to_string(ModelFamily::kRandomForest)));
  c.family = ModelFamily::kSvm;
  CHECK(dynamic_cast<LinearSvm*>(c.make().get()) != nullptr);
}

TEST_CASE("feature CSV layout") {
  FeatureMatrix m;
  m.names = {"a", "b"};
  m.recording_ids = {"r1"};
  m.groups = {"p1"};
  m.labels = {1};
  m.x.resize(1, 2);
  m.x << 0.5, -2;
  const auto csv = format_feature_csv(m);
  CHECK(csv.rfind("recording_id,patient_id,label,a,b\n", 0) == 0);
  CHECK(csv.find("r1,p1,1,0.5,-2") != std::string::npos);
}
