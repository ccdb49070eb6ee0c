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

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cryssl/audio_library.hpp"
#include "cryssl/catalog.hpp"
#include "cryssl/classifiers.hpp"

namespace cryssl {

enum class ModelFamily { kLogisticRegression, kRandomForest, kSvm };
std::string_view to_string(ModelFamily f);

struct ModelCandidate {
  ModelFamily family = ModelFamily::kLogisticRegression;
  double c = 1.0;      // logistic regression, svm
  int trees = 100;     // random forest
  int max_depth = 0;   // random forest, 0: unlimited
  int min_leaf = 1;    // random forest

  nlohmann::json to_json() const;
  std::unique_ptr<Classifier> make() const;
};

// Logistic regression and linear SVM with C in {0.01, 0.1, 1}; random forest
// (100 trees) unlimited depth or depth 4.
std::vector<ModelCandidate> default_model_grid();

// Fold index per sample. Whole groups go to one fold; groups are dealt
// round-robin class by class (by majority label) after a seeded shuffle, so
// folds are stratified. Throws if there are fewer groups than folds or fewer
// samples than folds in some class.
std::vector<int> group_kfold(std::span<const std::string> groups, std::span<const int> labels,
                             int num_classes, int folds, std::uint64_t seed);

// Mean over folds of the test-fold macro AUC (folds missing a class in
// train or test are skipped; throws if none remain).
double cv_auc(const Eigen::MatrixXd& x, std::span<const int> y, int num_classes,
              std::span<const int> fold_of, const ModelCandidate& candidate, std::uint64_t seed);

// Permutation null: shuffles the per-group (majority) labels across groups
// and relabels every sample with its group's new label.
std::vector<int> permute_group_labels(std::span<const std::string> groups, std::span<const int> labels,
                                      std::uint64_t seed);

struct ModelSelection {
  ModelCandidate best;
  double cv_auc = 0.0;
  std::vector<std::pair<ModelCandidate, double>> table;
};

// Grid search scored by group-aware k-fold CV AUC; ties go to the earlier
// grid entry.
ModelSelection select_model(const Eigen::MatrixXd& x, std::span<const int> y, int num_classes,
                            std::span<const std::string> groups, int folds, std::uint64_t seed,
                            const std::vector<ModelCandidate>& grid = default_model_grid());

// Selected-model CV AUC under `permutations` independent group-label
// permutations; `mean` estimates the centre of the null distribution.
struct PermutationNull {
  std::vector<double> cv_aucs;
  double mean = 0.0;
};

PermutationNull permutation_null(const Eigen::MatrixXd& x, std::span<const int> y, int num_classes,
                                 std::span<const std::string> groups, int folds, std::uint64_t seed,
                                 int permutations,
                                 const std::vector<ModelCandidate>& grid = default_model_grid());

struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::string> recording_ids;
  std::vector<std::string> groups;
  std::vector<int> labels;
  Eigen::MatrixXd x;
};

// Functionals of every task-labelled recording (all splits).
FeatureMatrix extract_feature_matrix(const Manifest& data, const TaskSpec& task, AudioLibrary& audio);

// CSV: header "recording_id,patient_id,label,<feature names>", one row each.
std::string format_feature_csv(const FeatureMatrix& m);

}  // namespace cryssl
