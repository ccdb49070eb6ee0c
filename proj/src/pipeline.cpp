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

#include "cryssl/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "cryssl/error.hpp"
#include "cryssl/ssl.hpp"

namespace cryssl {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kPretrain: return "pretrain";
    case Stage::kAdapt: return "adapt";
    case Stage::kFinetune: return "finetune";
    case Stage::kEvaluate: return "evaluate";
    case Stage::kSweep: return "sweep";
  }
  return "?";
}

Stage parse_stage(std::string_view s) {
  for (Stage st : {Stage::kPretrain, Stage::kAdapt, Stage::kFinetune, Stage::kEvaluate, Stage::kSweep})
    if (s == to_string(st)) return st;
  throw ConfigError("unknown stage '" + std::string(s) + "'");
}

std::vector<Stage> parse_stages(std::string_view csv) {
  std::set<Stage> out;
  if (csv == "all")
    return {Stage::kPretrain, Stage::kAdapt, Stage::kFinetune, Stage::kEvaluate, Stage::kSweep};
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto end = std::min(csv.find(',', start), csv.size());
    const auto tok = csv.substr(start, end - start);
    if (!tok.empty()) out.insert(parse_stage(tok));
    start = end + 1;
  }
  if (out.empty()) throw ConfigError("no stages requested");
  return {out.begin(), out.end()};
}

namespace {

std::string stage_dir(std::string_view tag) {
  if (tag == kStagePretrained) return "pretrain";
  if (tag == kStageCryAdapted) return "adapt";
  if (tag == kStageFinetuned) return "finetune";
  return "initialized";
}

}  // namespace

Pipeline::Pipeline(const RunConfig& cfg) : cfg_(cfg.resolved()), audio_(cfg_.frontend) {
  // The output location does not change results, so it stays out of the hash.
  json hashed = cfg_;
  hashed.erase("output_dir");
  hash_ = cryssl::config_hash(hashed);
  write_text_file(path("run_config.json"),
                  json{{"config_hash", hash_}, {"config", cfg_}}.dump(2) + "\n");
}

std::string Pipeline::path(const std::string& rel) const {
  return (fs::path(cfg_.output_dir) / rel).string();
}

const Manifest& Pipeline::cry() {
  if (cry_) return *cry_;
  if (cfg_.data.cry_manifest.empty()) throw ConfigError("data.cry_manifest is not set");
  Manifest m = load_manifest(cfg_.data.cry_manifest);
  if (!cfg_.data.keep_manifest_split)
    m = labelled_patient_split(m, TaskSpec::by_name(cfg_.data.task), cfg_.data.split,
                               derive_seed(cfg_.seed, "split"));
  save_manifest(m, path("data/cry_split.jsonl"));
  cry_ = std::move(m);
  return *cry_;
}

const Manifest& Pipeline::general() {
  if (general_) return *general_;
  if (cfg_.data.general_manifest.empty()) throw ConfigError("data.general_manifest is not set");
  general_ = load_manifest(cfg_.data.general_manifest);
  return *general_;
}

void Pipeline::stamp(Checkpoint& c) const {
  c.config_hashes["run"] = hash_;
  c.seeds["run"] = cfg_.seed;
}

void Pipeline::save_stage(Checkpoint& c, const std::string& rel) {
  stamp(c);
  const auto p = path(rel);
  save_checkpoint(c, p);
  produced_[c.stage] = p;
  spdlog::info("wrote {} checkpoint {}", c.stage, p);
}

void Pipeline::provide(const std::string& checkpoint_path) {
  const Checkpoint c = load_checkpoint(checkpoint_path);
  provided_[c.stage] = checkpoint_path;
  spdlog::info("using provided {} checkpoint {}", c.stage, checkpoint_path);
}

Checkpoint Pipeline::initialized() {
  if (auto c = find_checkpoint(kStageInitialized)) return *c;
  Encoder<float> enc(cfg_.encoder, cfg_.projection);
  const auto seed = derive_seed(cfg_.seed, "init");
  enc.init(seed);
  Checkpoint c = make_checkpoint(enc, kStageInitialized);
  c.seeds["init"] = seed;
  save_stage(c, "initialized/checkpoint.ckpt");
  return c;
}

std::optional<Checkpoint> Pipeline::find_checkpoint(std::string_view tag) {
  const std::string key(tag);
  const auto expected = encoder_config_hash(cfg_.encoder, cfg_.projection);
  std::string p;
  if (auto it = provided_.find(key); it != provided_.end()) p = it->second;
  else if (auto it2 = produced_.find(key); it2 != produced_.end()) p = it2->second;
  else if (fs::exists(path(stage_dir(tag) + "/checkpoint.ckpt"))) p = path(stage_dir(tag) + "/checkpoint.ckpt");
  if (p.empty()) return std::nullopt;
  Checkpoint c = load_checkpoint(p, expected);
  if (c.stage != key)
    throw StageDependencyError("checkpoint " + p + " is tagged '" + c.stage + "', expected '" + key + "'");
  return c;
}

Checkpoint Pipeline::require_checkpoint(std::string_view tag, std::string_view needed_by) {
  if (auto c = find_checkpoint(tag)) return *c;
  throw StageDependencyError("stage '" + std::string(needed_by) + "' needs a '" + std::string(tag) +
                             "' checkpoint: run that stage first or pass --stage-checkpoint");
}

Checkpoint Pipeline::pretrain() {
  Checkpoint init = initialized();
  Encoder<float> enc = encoder_from<float>(init);
  SslRunOptions opts{path("pretrain/metrics.jsonl"), path("pretrain")};
  fs::remove(opts.metrics_path);
  auto res = ssl_pretrain(general(), enc, cfg_.pretrain, audio_, opts);
  for (const auto& [k, v] : init.seeds) res.checkpoint.seeds.emplace(k, v);
  save_stage(res.checkpoint, "pretrain/checkpoint.ckpt");
  return res.checkpoint;
}

Checkpoint Pipeline::adapt() {
  const Checkpoint pre = require_checkpoint(kStagePretrained, "adapt");
  const Manifest& data = cry();
  const TaskSpec task = TaskSpec::by_name(cfg_.data.task);
  Manifest pool = data;
  pool.records.clear();
  for (const auto& r : data.records)
    if (r.split == Split::kTrain || !task.label(r)) pool.records.push_back(r);
  Manifest replay;
  if (cfg_.adapt.replay_fraction > 0.0) replay = general();
  SslRunOptions opts{path("adapt/metrics.jsonl"), path("adapt")};
  fs::remove(opts.metrics_path);
  auto res = cry_adapt(pool, replay, pre, cfg_.adapt, audio_, opts);
  write_text_file(path("adapt/replay_ids.json"), json(res.pool_ids).dump() + "\n");
  save_stage(res.checkpoint, "adapt/checkpoint.ckpt");
  return res.checkpoint;
}

Checkpoint Pipeline::finetune_source() {
  const auto& src = cfg_.finetune.source;
  if (src == "initialized") return initialized();
  if (src == "pretrained") return require_checkpoint(kStagePretrained, "finetune");
  if (src == "cry_adapted") return require_checkpoint(kStageCryAdapted, "finetune");
  if (cfg_.adapt_enabled || provided_.count(std::string(kStageCryAdapted)))
    if (auto c = find_checkpoint(kStageCryAdapted)) return *c;
  if (auto c = find_checkpoint(kStagePretrained)) return *c;
  throw StageDependencyError(
      "stage 'finetune' needs a 'pretrained' or 'cry_adapted' checkpoint: run the SSL stages "
      "first or pass --stage-checkpoint");
}

FineTuneResult Pipeline::finetune() {
  const Checkpoint src = finetune_source();
  const TaskSpec task = TaskSpec::by_name(cfg_.data.task);
  const auto seed = derive_seed(cfg_.seed, "finetune");
  FineTuneOptions opts;
  opts.tap = cfg_.finetune.tap;
  opts.diagnostic_dir = path("finetune");
  FineTuneResult res;
  json selection{{"source_stage", src.stage}, {"config_hash", hash_}, {"seed", seed}};
  if (cfg_.finetune.grid_search) {
    auto g = grid_search(src, task, cry(), cfg_.finetune.strategy, cfg_.finetune.grid, seed, audio_, opts);
    selected_ = g.best;
    json table = json::array();
    for (const auto& c : g.table)
      table.push_back({{"head_lr", c.head_lr}, {"encoder_lr", c.encoder_lr}, {"val_auc", c.val_auc}});
    selection["grid"] = table;
    res = std::move(g.best_run);
    std::string hist;
    for (const auto& e : res.history)
      hist += json{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss},
                   {"val_auc", e.val_auc}, {"head_lr", e.head_lr}, {"encoder_lr", e.encoder_lr}}
                  .dump() + "\n";
    write_text_file(path("finetune/history.jsonl"), hist);
  } else {
    selected_ = cfg_.finetune.strategy;
    opts.history_path = path("finetune/history.jsonl");
    res = train_supervised(src, task, cry(), cfg_.finetune.strategy, seed, audio_, opts);
  }
  selection["strategy"] = *selected_;
  selection["best_epoch"] = res.best_epoch;
  selection["best_val_auc"] = res.best_val_auc;
  write_text_file(path("finetune/selection.json"), selection.dump(2) + "\n");
  save_stage(res.checkpoint, "finetune/checkpoint.ckpt");
  return res;
}

FineTuneStrategy Pipeline::selected_strategy() {
  if (selected_) return *selected_;
  if (fs::exists(path("finetune/selection.json"))) {
    try {
      return json::parse(read_text_file(path("finetune/selection.json"))).at("strategy").get<FineTuneStrategy>();
    } catch (const json::exception& e) {
      throw ParseError("finetune/selection.json: " + std::string(e.what()));
    }
  }
  return cfg_.finetune.strategy;
}

EvalReport Pipeline::evaluate() {
  const Checkpoint src = finetune_source();
  TrainingJob job;
  job.model = &src;
  job.task = TaskSpec::by_name(cfg_.data.task);
  job.data = &cry();
  job.strategy = selected_strategy();
  job.options.tap = cfg_.finetune.tap;
  job.options.diagnostic_dir = path("evaluate");
  const auto seed = derive_seed(cfg_.seed, "evaluate");
  EvalReport rep = repeat_eval(job, cfg_.evaluate.repeats, seed, audio_);
  rep.config_hash = hash_;
  json j = rep.to_json();
  j["source_stage"] = src.stage;
  j["source_config_hashes"] = src.config_hashes;
  j["seed"] = seed;
  j["run_seed"] = cfg_.seed;
  j["strategy_config"] = job.strategy;
  write_text_file(path("evaluate/report.json"), j.dump(2) + "\n");
  write_text_file(path("evaluate/report.txt"), rep.table());
  spdlog::info("evaluate: mean test AUC {:.4f} over {}/{} runs", rep.mean, rep.completed, rep.runs.size());
  return rep;
}

SweepResult Pipeline::sweep() {
  std::vector<Checkpoint> models;
  for (const auto& v : cfg_.sweep.variants) {
    if (v == "initialized") models.push_back(initialized());
    else if (v == "pretrained") models.push_back(require_checkpoint(kStagePretrained, "sweep"));
    else models.push_back(require_checkpoint(kStageCryAdapted, "sweep"));
  }
  std::vector<SweepVariant> variants;
  for (std::size_t i = 0; i < models.size(); ++i) variants.push_back({cfg_.sweep.variants[i], &models[i]});
  SweepConfig sc;
  sc.fractions = cfg_.sweep.fractions;
  sc.seeds = cfg_.sweep.seeds;
  sc.strategies = cfg_.sweep.strategies;
  sc.seed = derive_seed(cfg_.seed, "sweep");
  sc.tap = cfg_.finetune.tap;
  auto res = subset_sweep(variants, TaskSpec::by_name(cfg_.data.task), cry(), sc, audio_);
  json j = res.to_json();
  j["config_hash"] = hash_;
  j["seed"] = sc.seed;
  j["run_seed"] = cfg_.seed;
  write_text_file(path("sweep/sweep.json"), j.dump(2) + "\n");
  write_text_file(path("sweep/table.txt"), res.table());
  write_text_file(path("sweep/plot.svg"), sweep_plot_svg(res));
  return res;
}

PipelineResult Pipeline::run(const std::vector<Stage>& stages) {
  PipelineResult out;
  std::vector<Stage> order = stages;
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  for (Stage s : order) {
    spdlog::info("stage {}", to_string(s));
    switch (s) {
      case Stage::kPretrain: pretrain(); break;
      case Stage::kAdapt:
        if (!cfg_.adapt_enabled) {
          spdlog::info("adapt disabled in config; skipped");
          break;
        }
        adapt();
        break;
      case Stage::kFinetune: out.finetune = finetune(); break;
      case Stage::kEvaluate: out.report = evaluate(); break;
      case Stage::kSweep: out.sweep = sweep(); break;
    }
  }
  out.checkpoints = produced_;
  return out;
}

}  // namespace cryssl
