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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cryssl/finetune.hpp"

namespace cryssl {

struct ScoreSet {
  std::string task;
  int num_classes = 2;
  std::vector<double> scores;  // row-major N x K
  std::vector<int> labels;

  void validate() const;
  double macro_auc() const;
};

struct RunOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  double auc = 0.0;
  std::string error;
};

struct EvalReport {
  std::string task;
  std::string strategy;
  std::string config_hash;
  std::vector<RunOutcome> runs;
  std::size_t completed = 0;
  double mean = 0.0;
  std::optional<double> stderr_auc;  // stddev / sqrt(completed), completed >= 2

  nlohmann::json to_json() const;
  std::string table() const;
};

// Statistics over the completed runs; failed runs stay listed.
EvalReport summarize(std::vector<RunOutcome> runs);

// Runs `run(seed_i)` for i < repeats with seeds derived from base_seed. A run
// that throws cryssl::Error is recorded as failed.
EvalReport repeat_eval(const std::function<double(std::uint64_t)>& run, int repeats,
                       std::uint64_t base_seed);

struct TrainingJob {
  const Checkpoint* model = nullptr;
  TaskSpec task = TaskSpec::neuro_injury();
  const Manifest* data = nullptr;
  FineTuneStrategy strategy;
  FineTuneOptions options;
};

ScoreSet test_scores(const Checkpoint& finetuned, const TaskSpec& task, const Manifest& data,
                     AudioLibrary& audio);

// Trains with `seed` and returns the test-split macro AUC.
double train_and_test(const TrainingJob& job, std::uint64_t seed, AudioLibrary& audio);

EvalReport repeat_eval(const TrainingJob& job, int repeats, std::uint64_t base_seed,
                       AudioLibrary& audio);

struct SweepVariant {
  std::string name;
  const Checkpoint* model = nullptr;
};

struct SweepConfig {
  std::vector<double> fractions{0.03, 0.05, 0.1, 0.2, 0.5, 1.0};
  int seeds = 5;
  std::vector<FineTuneStrategy> strategies;  // default: linear_bn and end_to_end
  std::uint64_t seed = 0;
  HeadTap tap = HeadTap::kProjectionLayer1;

  void validate() const;
};

struct SweepRow {
  std::string variant;
  std::string strategy;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::size_t train_size = 0;
  RunOutcome outcome;
};

struct SweepCell {
  std::string variant;
  std::string strategy;
  double fraction = 0.0;
  EvalReport report;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepCell> cells;

  const SweepCell* find(std::string_view variant, std::string_view strategy, double fraction) const;
  nlohmann::json to_json() const;
  std::string table() const;
};

// For each variant x strategy x fraction x seed: subset_sample, train_supervised,
// test AUC. Subsets and training seeds are shared across variants.
SweepResult subset_sweep(const std::vector<SweepVariant>& variants, const TaskSpec& task,
                         const Manifest& data, const SweepConfig& cfg, AudioLibrary& audio);

// Mean AUC vs fraction (log x axis) with +-1 stderr bands, one curve per
// (variant, strategy).
std::string sweep_plot_svg(const SweepResult& sweep);

}  // namespace cryssl
