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

#include "cryssl/baseline.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <map>

#include "cryssl/error.hpp"
#include "cryssl/features.hpp"
#include "cryssl/metrics.hpp"

namespace cryssl {

std::string_view to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::kLogisticRegression: return "logistic_regression";
    case ModelFamily::kRandomForest: return "random_forest";
    case ModelFamily::kSvm: return "svm";
  }
  return "?";
}

nlohmann::json ModelCandidate::to_json() const {
  nlohmann::json j{{"family", to_string(family)}};
  if (family == ModelFamily::kRandomForest) {
    j["trees"] = trees;
    j["max_depth"] = max_depth;
    j["min_leaf"] = min_leaf;
  } else {
    j["C"] = c;
  }
  return j;
}

std::unique_ptr<Classifier> ModelCandidate::make() const {
  switch (family) {
    case ModelFamily::kLogisticRegression: return std::make_unique<LogisticRegression>(c);
    case ModelFamily::kSvm: return std::make_unique<LinearSvm>(c);
    case ModelFamily::kRandomForest: return std::make_unique<RandomForest>(trees, max_depth, min_leaf);
  }
  throw ValidationError("unknown model family");
}

std::vector<ModelCandidate> default_model_grid() {
  std::vector<ModelCandidate> g;
  for (double c : {0.01, 0.1, 1.0}) g.push_back({ModelFamily::kLogisticRegression, c});
  for (double c : {0.01, 0.1, 1.0}) g.push_back({ModelFamily::kSvm, c});
  g.push_back({ModelFamily::kRandomForest, 1.0, 100, 0, 1});
  g.push_back({ModelFamily::kRandomForest, 1.0, 100, 4, 1});
  return g;
}

std::vector<int> group_kfold(std::span<const std::string> groups, std::span<const int> labels,
                             int num_classes, int folds, std::uint64_t seed) {
  if (groups.size() != labels.size()) throw ValidationError("kfold: group/label count mismatch");
  if (folds < 2) throw ValidationError("kfold: need at least 2 folds");
  std::vector<int> per_class(num_classes, 0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw ValidationError("kfold: label out of range");
    ++per_class[y];
  }
  for (int c = 0; c < num_classes; ++c)
    if (per_class[c] < folds)
      throw ValidationError(fmt::format("kfold: class {} has {} samples, fewer than {} folds", c,
                                        per_class[c], folds));
  std::map<std::string, std::vector<int>> group_counts;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto& v = group_counts[groups[i]];
    v.resize(num_classes, 0);
    ++v[labels[i]];
  }
  if (static_cast<int>(group_counts.size()) < folds)
    throw ValidationError(fmt::format("kfold: {} groups, fewer than {} folds", group_counts.size(), folds));

  std::vector<std::vector<std::string>> by_class(num_classes);
  for (const auto& [g, cnt] : group_counts)
    by_class[std::max_element(cnt.begin(), cnt.end()) - cnt.begin()].push_back(g);
  Rng rng(seed);
  std::map<std::string, int> fold_of_group;
  int next = 0;
  for (auto& gs : by_class) {
    std::shuffle(gs.begin(), gs.end(), rng);
    for (const auto& g : gs) fold_of_group[g] = next++ % folds;
  }
  std::vector<int> out(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) out[i] = fold_of_group[groups[i]];
  return out;
}

std::vector<int> permute_group_labels(std::span<const std::string> groups, std::span<const int> labels,
                                      std::uint64_t seed) {
  if (groups.size() != labels.size()) throw ValidationError("permute: group/label count mismatch");
  std::map<std::string, std::map<int, int>> counts;
  for (std::size_t i = 0; i < groups.size(); ++i) ++counts[groups[i]][labels[i]];
  std::vector<std::string> names;
  std::vector<int> group_label;
  for (const auto& [g, cnt] : counts) {
    names.push_back(g);
    group_label.push_back(std::max_element(cnt.begin(), cnt.end(), [](auto& a, auto& b) {
                            return a.second < b.second;
                          })->first);
  }
  Rng rng(seed);
  std::shuffle(group_label.begin(), group_label.end(), rng);
  std::map<std::string, int> relabel;
  for (std::size_t i = 0; i < names.size(); ++i) relabel[names[i]] = group_label[i];
  std::vector<int> out(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) out[i] = relabel[groups[i]];
  return out;
}

double cv_auc(const Eigen::MatrixXd& x, std::span<const int> y, int num_classes,
              std::span<const int> fold_of, const ModelCandidate& candidate, std::uint64_t seed) {
  const int folds = fold_of.empty() ? 0 : *std::max_element(fold_of.begin(), fold_of.end()) + 1;
  std::vector<double> aucs;
  for (int f = 0; f < folds; ++f) {
    std::vector<int> tr, te;
    for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == f ? te : tr).push_back(static_cast<int>(i));
    std::vector<int> ytr, yte;
    for (int i : tr) ytr.push_back(y[i]);
    for (int i : te) yte.push_back(y[i]);
    auto has_all = [&](const std::vector<int>& v) {
      for (int c = 0; c < num_classes; ++c)
        if (std::find(v.begin(), v.end(), c) == v.end()) return false;
      return true;
    };
    if (!has_all(ytr) || !has_all(yte)) continue;
    Eigen::MatrixXd xtr(tr.size(), x.cols()), xte(te.size(), x.cols());
    for (std::size_t i = 0; i < tr.size(); ++i) xtr.row(i) = x.row(tr[i]);
    for (std::size_t i = 0; i < te.size(); ++i) xte.row(i) = x.row(te[i]);
    Rng rng(derive_seed(seed, "fold/" + std::to_string(f)));
    auto model = candidate.make();
    model->fit(xtr, ytr, num_classes, rng);
    const Eigen::MatrixXd s = model->scores(xte);
    std::vector<double> flat(s.size());
    for (Eigen::Index i = 0; i < s.rows(); ++i)
      for (Eigen::Index c = 0; c < s.cols(); ++c) flat[i * s.cols() + c] = s(i, c);
    aucs.push_back(macro_ovr_auc(flat, yte, num_classes));
  }
  if (aucs.empty()) throw ValidationError("cv: no fold holds every class in train and test");
  return mean_of(aucs);
}

ModelSelection select_model(const Eigen::MatrixXd& x, std::span<const int> y, int num_classes,
                            std::span<const std::string> groups, int folds, std::uint64_t seed,
                            const std::vector<ModelCandidate>& grid) {
  if (grid.empty()) throw ValidationError("select_model: empty grid");
  if (x.rows() != static_cast<Eigen::Index>(y.size()))
    throw ValidationError("select_model: row/label count mismatch");
  const auto fold_of = group_kfold(groups, y, num_classes, folds, seed);
  ModelSelection sel;
  bool have = false;
  for (const auto& cand : grid) {
    const double auc = cv_auc(x, y, num_classes, fold_of, cand, seed);
    sel.table.emplace_back(cand, auc);
    spdlog::debug("baseline {}: cv auc {:.4f}", cand.to_json().dump(), auc);
    if (!have || auc > sel.cv_auc) {
      have = true;
      sel.best = cand;
      sel.cv_auc = auc;
    }
  }
  return sel;
}

PermutationNull permutation_null(const Eigen::MatrixXd& x, std::span<const int> y, int num_classes,
                                 std::span<const std::string> groups, int folds, std::uint64_t seed,
                                 int permutations, const std::vector<ModelCandidate>& grid) {
  if (permutations < 1) throw ValidationError("permutation_null: permutations must be >= 1");
  PermutationNull out;
  for (int i = 0; i < permutations; ++i) {
    const auto tag = std::to_string(i);
    const auto yp = permute_group_labels(groups, y, derive_seed(seed, "perm/" + tag));
    out.cv_aucs.push_back(
        select_model(x, yp, num_classes, groups, folds, derive_seed(seed, "cv/" + tag), grid).cv_auc);
  }
  out.mean = mean_of(out.cv_aucs);
  return out;
}

FeatureMatrix extract_feature_matrix(const Manifest& data, const TaskSpec& task, AudioLibrary& audio) {
  FeatureMatrix m;
  m.names = functional_feature_names();
  std::vector<std::vector<double>> rows;
  for (const auto& r : data.records) {
    const auto y = task.label(r);
    if (!y) continue;
    rows.push_back(extract_functionals(audio.waveform(data, r)));
    m.recording_ids.push_back(r.recording_id);
    m.groups.push_back(r.patient_id);
    m.labels.push_back(*y);
  }
  m.x.resize(static_cast<Eigen::Index>(rows.size()), kFunctionalDim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < kFunctionalDim; ++j) m.x(i, j) = rows[i][j];
  return m;
}

std::string format_feature_csv(const FeatureMatrix& m) {
  std::string s = "recording_id,patient_id,label";
  for (const auto& n : m.names) s += "," + n;
  s += "\n";
  for (Eigen::Index i = 0; i < m.x.rows(); ++i) {
    s += fmt::format("{},{},{}", m.recording_ids[i], m.groups[i], m.labels[i]);
    for (Eigen::Index j = 0; j < m.x.cols(); ++j) s += fmt::format(",{:.17g}", m.x(i, j));
    s += "\n";
  }
  return s;
}

}  // namespace cryssl
