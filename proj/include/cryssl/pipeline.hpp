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
#include <optional>
#include <string>
#include <vector>

#include "cryssl/audio_library.hpp"
#include "cryssl/checkpoint.hpp"
#include "cryssl/config.hpp"
#include "cryssl/evaluation.hpp"

namespace cryssl {

// In execution order.
enum class Stage { kPretrain, kAdapt, kFinetune, kEvaluate, kSweep };
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);
// Comma-separated names or "all"; returned sorted in execution order.
std::vector<Stage> parse_stages(std::string_view csv);

struct PipelineResult {
  std::map<std::string, std::string> checkpoints;  // stage tag -> path
  std::optional<FineTuneResult> finetune;
  std::optional<EvalReport> report;
  std::optional<SweepResult> sweep;
};

// Runs stages against one resolved RunConfig. Output layout under
// output_dir:
//   run_config.json                 resolved config and its hash
//   data/cry_split.jsonl            cry manifest with patient-disjoint splits
//   initialized/checkpoint.ckpt     random initialisation
//   pretrain/checkpoint.ckpt, pretrain/metrics.jsonl
//   adapt/checkpoint.ckpt, adapt/metrics.jsonl
//   finetune/checkpoint.ckpt, finetune/history.jsonl, finetune/selection.json
//   evaluate/report.json, evaluate/report.txt
//   sweep/sweep.json, sweep/table.txt, sweep/plot.svg
// A stage's upstream checkpoint comes from (in order) a checkpoint handed to
// provide(), this run's output of the upstream stage, or an existing file in
// the layout above. Missing upstream checkpoints raise StageDependencyError.
class Pipeline {
 public:
  explicit Pipeline(const RunConfig& cfg);

  const RunConfig& config() const { return cfg_; }
  const std::string& config_hash() const { return hash_; }

  // Registers an externally supplied checkpoint under its stage tag.
  void provide(const std::string& checkpoint_path);

  PipelineResult run(const std::vector<Stage>& stages);

  Checkpoint pretrain();
  Checkpoint adapt();
  FineTuneResult finetune();
  EvalReport evaluate();
  SweepResult sweep();

 private:
  std::string path(const std::string& rel) const;
  const Manifest& cry();
  const Manifest& general();
  Checkpoint initialized();
  // nullopt if the stage's checkpoint is not available anywhere.
  std::optional<Checkpoint> find_checkpoint(std::string_view stage_tag);
  Checkpoint require_checkpoint(std::string_view stage_tag, std::string_view needed_by);
  Checkpoint finetune_source();
  FineTuneStrategy selected_strategy();
  void stamp(Checkpoint& c) const;
  void save_stage(Checkpoint& c, const std::string& rel);

  RunConfig cfg_;
  std::string hash_;
  AudioLibrary audio_;
  std::optional<Manifest> cry_, general_;
  std::map<std::string, std::string> provided_;  // stage tag -> path
  std::map<std::string, std::string> produced_;
  std::optional<FineTuneStrategy> selected_;
};

}  // namespace cryssl
