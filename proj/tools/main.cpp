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

// Command-line entry point: corpus synthesis, SSL stages, fine-tuning,
// evaluation, sweeps, the classical baseline and catalog utilities.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <iostream>
#include <optional>

#include <json.hpp>

#include "cryssl/baseline.hpp"
#include "cryssl/catalog.hpp"
#include "cryssl/checkpoint.hpp"
#include "cryssl/config.hpp"
#include "cryssl/error.hpp"
#include "cryssl/pipeline.hpp"
#include "cryssl/synth.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> scale;
  std::string out;
  std::vector<std::string> stage_checkpoints;
  std::string stages = "all";
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_stages) {
  cmd->add_option("--config", f.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Override the top-level seed");
  cmd->add_option("--scale", f.scale, "Shrink epochs and batch sizes by this factor (0, 1]");
  cmd->add_option("--out", f.out, "Override the output directory");
  cmd->add_option("--stage-checkpoint", f.stage_checkpoints,
                  "Upstream checkpoint(s); the stage tag inside each file decides its role")
      ->check(CLI::ExistingFile);
  if (with_stages)
    cmd->add_option("--stages", f.stages,
                    "Comma-separated subset of pretrain,adapt,finetune,evaluate,sweep, or 'all'");
}

cryssl::RunConfig load_config(const RunFlags& f) {
  auto cfg = cryssl::load_run_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.scale) cfg.scale = *f.scale;
  if (!f.out.empty()) cfg.output_dir = f.out;
  cfg.validate();
  return cfg;
}

int run_stages(const RunFlags& f, const std::vector<cryssl::Stage>& stages) {
  cryssl::Pipeline p(load_config(f));
  for (const auto& c : f.stage_checkpoints) p.provide(c);
  auto res = p.run(stages);
  json summary{{"config_hash", p.config_hash()}, {"checkpoints", res.checkpoints}};
  if (res.finetune) {
    summary["finetune"] = {{"best_epoch", res.finetune->best_epoch},
                           {"best_val_auc", res.finetune->best_val_auc}};
  }
  if (res.report) summary["evaluate"] = res.report->to_json();
  if (res.sweep) std::cout << res.sweep->table();
  std::cout << summary.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cryssl: self-supervised audio representation learning for infant cry analysis"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error"}));

  // synth-corpus
  auto* synth = app.add_subcommand("synth-corpus", "Generate synthetic cry and general-audio corpora");
  std::string synth_out, synth_config, synth_kind = "both";
  std::optional<std::uint64_t> synth_seed;
  cryssl::CrySynthSpec cry_spec;
  cryssl::GeneralSynthSpec gen_spec;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--config", synth_config, "JSON with optional 'cry' and 'general' objects")
      ->check(CLI::ExistingFile);
  synth->add_option("--kind", synth_kind, "cry, general or both")
      ->check(CLI::IsMember({"cry", "general", "both"}));
  synth->add_option("--seed", synth_seed, "Seed for both corpora");
  synth->add_option("--classes", cry_spec.classes);
  synth->add_option("--patients-per-class", cry_spec.patients_per_class);
  synth->add_option("--recordings-per-patient", cry_spec.recordings_per_patient);
  synth->add_option("--unlabeled-patients", cry_spec.unlabeled_patients);
  synth->add_option("--clips", gen_spec.clips, "General-audio clip count");

  // SSL / supervised stages
  RunFlags flags;
  auto* pretrain = app.add_subcommand("pretrain", "SimCLR pre-training on the general corpus");
  auto* adapt = app.add_subcommand("adapt", "SimCLR cry adaptation with replay");
  auto* finetune = app.add_subcommand("finetune", "Supervised fine-tuning (optionally grid search)");
  auto* evaluate = app.add_subcommand("evaluate", "Repeated seeded training, test AUC mean +- stderr");
  auto* sweep = app.add_subcommand("sweep", "Label-fraction sweep with table and plot");
  auto* pipeline = app.add_subcommand("pipeline", "Run several stages in order");
  for (auto* c : {pretrain, adapt, finetune, evaluate, sweep}) add_run_flags(c, flags, false);
  add_run_flags(pipeline, flags, true);

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Functional features + classical model selection");
  std::string bl_manifest, bl_task = "neuro_injury", bl_features_out, bl_out;
  int bl_folds = 10;
  std::uint64_t bl_seed = 0;
  bool bl_permute = false;
  baseline->add_option("--manifest", bl_manifest)->required()->check(CLI::ExistingFile);
  baseline->add_option("--task", bl_task)->check(CLI::IsMember({"neuro_injury", "trigger"}));
  baseline->add_option("--folds", bl_folds);
  baseline->add_option("--seed", bl_seed);
  baseline->add_flag("--permute-labels", bl_permute, "Shuffle patient labels (null check)");
  baseline->add_option("--features-out", bl_features_out, "Write the feature matrix as CSV");
  baseline->add_option("--out", bl_out, "Write the selection report as JSON");

  // catalog
  auto* catalog = app.add_subcommand("catalog", "Manifest utilities");
  catalog->require_subcommand(1);
  auto* validate = catalog->add_subcommand("validate", "Check a manifest");
  std::string cat_manifest, cat_out;
  std::uint64_t cat_seed = 0;
  cryssl::SplitFractions fractions;
  validate->add_option("manifest", cat_manifest)->required()->check(CLI::ExistingFile);
  auto* split = catalog->add_subcommand("split", "Assign patient-disjoint splits");
  split->add_option("manifest", cat_manifest)->required()->check(CLI::ExistingFile);
  std::vector<double> split_fractions;
  split->add_option("--out", cat_out, "Output manifest (default: stdout)");
  split->add_option("--seed", cat_seed);
  auto* frac_opt = split->add_option("--fractions", split_fractions, "train,val,test patient fractions")
                       ->delimiter(',')
                       ->expected(3);
  split->add_option("--train", fractions.train)->excludes(frac_opt);
  split->add_option("--val", fractions.val)->excludes(frac_opt);
  split->add_option("--test", fractions.test)->excludes(frac_opt);
  std::string split_task;
  split->add_option("--task", split_task,
                    "Split only patients labelled for this task; the rest join train");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Print a checkpoint header");
  std::string inspect_path;
  inspect->add_option("checkpoint", inspect_path)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (synth->parsed()) {
      if (!synth_config.empty()) {
        const auto j = json::parse(cryssl::read_text_file(synth_config));
        if (j.contains("cry")) cry_spec = j.at("cry").get<cryssl::CrySynthSpec>();
        if (j.contains("general")) gen_spec = j.at("general").get<cryssl::GeneralSynthSpec>();
      }
      if (synth_seed) {
        cry_spec.seed = cryssl::derive_seed(*synth_seed, "cry");
        gen_spec.seed = cryssl::derive_seed(*synth_seed, "general");
      }
      json out;
      if (synth_kind != "general") {
        const auto dir = synth_kind == "both" ? (fs::path(synth_out) / "cry").string() : synth_out;
        const auto m = cryssl::write_cry_corpus(cry_spec, dir);
        out["cry"] = {{"manifest", (fs::path(dir) / "manifest.jsonl").string()}, {"recordings", m.records.size()}, {"spec", cry_spec}};
      }
      if (synth_kind != "cry") {
        const auto dir = synth_kind == "both" ? (fs::path(synth_out) / "general").string() : synth_out;
        const auto m = cryssl::write_general_corpus(gen_spec, dir);
        out["general"] = {{"manifest", (fs::path(dir) / "manifest.jsonl").string()}, {"recordings", m.records.size()}, {"spec", gen_spec}};
      }
      std::cout << out.dump(2) << "\n";
      return 0;
    }
    if (pretrain->parsed()) return run_stages(flags, {cryssl::Stage::kPretrain});
    if (adapt->parsed()) return run_stages(flags, {cryssl::Stage::kAdapt});
    if (finetune->parsed()) return run_stages(flags, {cryssl::Stage::kFinetune});
    if (evaluate->parsed()) return run_stages(flags, {cryssl::Stage::kEvaluate});
    if (sweep->parsed()) return run_stages(flags, {cryssl::Stage::kSweep});
    if (pipeline->parsed()) return run_stages(flags, cryssl::parse_stages(flags.stages));

    if (baseline->parsed()) {
      const auto m = cryssl::load_manifest(bl_manifest);
      const auto task = cryssl::TaskSpec::by_name(bl_task);
      cryssl::AudioLibrary audio;
      auto fm = cryssl::extract_feature_matrix(m, task, audio);
      if (!bl_features_out.empty()) cryssl::write_text_file(bl_features_out, cryssl::format_feature_csv(fm));
      if (bl_permute) fm.labels = cryssl::permute_group_labels(fm.groups, fm.labels, bl_seed);
      const auto sel = cryssl::select_model(fm.x, fm.labels, task.num_classes(), fm.groups, bl_folds, bl_seed);
      json table = json::array();
      for (const auto& [cand, auc] : sel.table) table.push_back({{"model", cand.to_json()}, {"cv_auc", auc}});
      json rep{{"task", bl_task},       {"folds", bl_folds},        {"seed", bl_seed},
               {"permuted", bl_permute}, {"best", sel.best.to_json()}, {"cv_auc", sel.cv_auc},
               {"table", table},        {"recordings", fm.labels.size()},
               {"feature_dim", fm.names.size()}};
      if (!bl_out.empty()) cryssl::write_text_file(bl_out, rep.dump(2) + "\n");
      std::cout << rep.dump(2) << "\n";
      return 0;
    }

    if (validate->parsed()) {
      const auto m = cryssl::load_manifest(cat_manifest);
      cryssl::validate_manifest(m);
      std::cout << "ok: " << m.records.size() << " recordings, " << m.patients().size() << " patients\n";
      return 0;
    }
    if (split->parsed()) {
      const auto in = cryssl::load_manifest(cat_manifest);
      if (!split_fractions.empty()) fractions = {split_fractions[0], split_fractions[1], split_fractions[2]};
      const auto m = split_task.empty()
                         ? cryssl::patient_disjoint_split(in, fractions, cat_seed)
                         : cryssl::labelled_patient_split(in, cryssl::TaskSpec::by_name(split_task),
                                                          fractions, cat_seed);
      if (cat_out.empty()) {
        std::cout << cryssl::format_manifest(m);
      } else {
        cryssl::save_manifest(m, cat_out);
        std::cout << "wrote " << cat_out << "\n";
      }
      return 0;
    }
    if (inspect->parsed()) {
      const auto c = cryssl::load_checkpoint(inspect_path);
      json j{{"stage", c.stage},          {"dtype", c.dtype},
             {"encoder", c.encoder},      {"projection", c.projection},
             {"head_tap", cryssl::to_string(c.head_tap)}, {"head_classes", c.head_classes},
             {"config_hashes", c.config_hashes}, {"seeds", c.seeds},
             {"metadata", c.metadata},    {"tensors", c.tensors.size()}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }
  } catch (const cryssl::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const json::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
