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
#include <string>
#include <vector>

#include <json.hpp>

#include "cryssl/augment.hpp"
#include "cryssl/catalog.hpp"
#include "cryssl/encoder.hpp"
#include "cryssl/evaluation.hpp"
#include "cryssl/finetune.hpp"
#include "cryssl/mel.hpp"
#include "cryssl/ssl.hpp"
#include "cryssl/synth.hpp"

namespace cryssl {

// FNV-1a of the compact dump of `j` (object keys sorted), as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

// JSON mapping for every config struct. Parsing starts from the struct's
// defaults, takes the keys present and throws ConfigError on unknown keys or
// mistyped values.
void to_json(nlohmann::json& j, const FrontendConfig& c);
void from_json(const nlohmann::json& j, FrontendConfig& c);
void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);
void to_json(nlohmann::json& j, const ProjectionHeadConfig& c);
void from_json(const nlohmann::json& j, ProjectionHeadConfig& c);
void to_json(nlohmann::json& j, const AugmentationChain& c);
void from_json(const nlohmann::json& j, AugmentationChain& c);
void to_json(nlohmann::json& j, const SslTrainConfig& c);
void from_json(const nlohmann::json& j, SslTrainConfig& c);
void to_json(nlohmann::json& j, const FineTuneStrategy& c);
void from_json(const nlohmann::json& j, FineTuneStrategy& c);
void to_json(nlohmann::json& j, const GridSearchSpec& c);
void from_json(const nlohmann::json& j, GridSearchSpec& c);
void to_json(nlohmann::json& j, const SplitFractions& c);
void from_json(const nlohmann::json& j, SplitFractions& c);
void to_json(nlohmann::json& j, const CrySynthSpec& c);
void from_json(const nlohmann::json& j, CrySynthSpec& c);
void to_json(nlohmann::json& j, const GeneralSynthSpec& c);
void from_json(const nlohmann::json& j, GeneralSynthSpec& c);

struct DataConfig {
  std::string cry_manifest;      // labelled (plus optional unlabelled) cry corpus
  std::string general_manifest;  // general-audio corpus for pre-training and replay
  std::string task = "neuro_injury";
  SplitFractions split{0.6, 0.2, 0.2};
  // Keep split fields already present in the cry manifest instead of
  // re-splitting by patient.
  bool keep_manifest_split = false;
};

struct FinetuneStageConfig {
  FineTuneStrategy strategy;
  bool grid_search = false;
  GridSearchSpec grid;
  HeadTap tap = HeadTap::kProjectionLayer1;
  // Checkpoint the classifier starts from: "auto" (cry_adapted if available,
  // else pretrained), "pretrained", "cry_adapted" or "initialized".
  std::string source = "auto";
};

struct EvaluateStageConfig {
  int repeats = 10;
};

struct SweepStageConfig {
  std::vector<double> fractions{0.03, 0.05, 0.1, 0.2, 0.5, 1.0};
  int seeds = 5;
  std::vector<FineTuneStrategy> strategies;  // empty: linear_bn and end_to_end defaults
  std::vector<std::string> variants{"pretrained", "cry_adapted"};
};

struct RunConfig {
  std::uint64_t seed = 0;
  double scale = 1.0;
  int workers = 1;
  std::string output_dir = "runs/default";
  FrontendConfig frontend;
  EncoderConfig encoder;
  ProjectionHeadConfig projection;
  DataConfig data;
  SslTrainConfig pretrain;
  bool adapt_enabled = true;
  SslTrainConfig adapt;
  FinetuneStageConfig finetune;
  EvaluateStageConfig evaluate;
  SweepStageConfig sweep;

  RunConfig();
  void validate() const;
  // Copy with epochs, warm-up epochs and batch sizes multiplied by `scale`
  // (rounded; batches >= 8, epochs >= 2, warm-up >= 1) and per-stage seeds
  // derived from `seed`. scale and seed are then fixed in the copy.
  RunConfig resolved() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::string& path);
std::string format_run_config(const RunConfig& c);

int scale_count(int value, double scale, int floor);

}  // namespace cryssl
