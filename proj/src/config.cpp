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

#include "cryssl/config.hpp"

#include <cmath>
#include <filesystem>
#include <set>

#include "cryssl/error.hpp"
#include "cryssl/util.hpp"

namespace cryssl {

using nlohmann::json;

std::string config_hash(const json& j) { return hex64(fnv1a64(j.dump())); }

namespace {

// Pulls known keys from a JSON object and rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j.is_object()) throw ConfigError(what_ + ": expected an object");
  }
  template <typename T>
  Reader& get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return *this;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(what_ + "." + key + ": " + e.what());
    }
    return *this;
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError(what_ + ": unknown key '" + k + "'");
  }

 private:
  const json& j_;
  std::string what_;
  std::set<std::string> used_;
};

std::string get_string(const json& j, const char* what) {
  if (!j.is_string()) throw ConfigError(std::string(what) + ": expected a string");
  return j.get<std::string>();
}

}  // namespace

void to_json(json& j, const FrontendConfig& c) {
  j = json{{"sample_rate", c.sample_rate}, {"n_mels", c.n_mels}, {"window_s", c.window_s},
           {"hop_s", c.hop_s},             {"n_fft", c.n_fft},   {"fmin", c.fmin},
           {"fmax", c.fmax},               {"chunk_s", c.chunk_s}, {"log_floor", c.log_floor}};
}
void from_json(const json& j, FrontendConfig& c) {
  Reader r(j, "frontend");
  r.get("sample_rate", c.sample_rate).get("n_mels", c.n_mels).get("window_s", c.window_s);
  r.get("hop_s", c.hop_s).get("n_fft", c.n_fft).get("fmin", c.fmin).get("fmax", c.fmax);
  r.get("chunk_s", c.chunk_s).get("log_floor", c.log_floor);
}

void to_json(json& j, const EncoderConfig& c) {
  j = json{{"channels", c.channels},         {"convs_per_block", c.convs_per_block},
           {"pooled_blocks", c.pooled_blocks}, {"input_mels", c.input_mels},
           {"input_norm", c.input_norm}};
}
void from_json(const json& j, EncoderConfig& c) {
  Reader r(j, "encoder");
  r.get("channels", c.channels).get("convs_per_block", c.convs_per_block);
  r.get("pooled_blocks", c.pooled_blocks).get("input_mels", c.input_mels).get("input_norm", c.input_norm);
}

void to_json(json& j, const ProjectionHeadConfig& c) {
  j = json{{"layers", c.layers}, {"hidden_dim", c.hidden_dim}, {"bottleneck_dim", c.bottleneck_dim}};
}
void from_json(const json& j, ProjectionHeadConfig& c) {
  Reader r(j, "projection");
  r.get("layers", c.layers).get("hidden_dim", c.hidden_dim).get("bottleneck_dim", c.bottleneck_dim);
}

void to_json(json& j, const AugmentationChain& c) {
  j = json{{"random_chunk", c.random_chunk}, {"gain_jitter", c.gain_jitter},
           {"gain_db", c.gain_db},           {"background_mix", c.background_mix},
           {"snr_min_db", c.snr_min_db},     {"snr_max_db", c.snr_max_db},
           {"spec_mask", c.spec_mask},       {"time_masks", c.time_masks},
           {"max_time_width", c.max_time_width}, {"mel_masks", c.mel_masks},
           {"max_mel_width", c.max_mel_width}};
}
void from_json(const json& j, AugmentationChain& c) {
  Reader r(j, "augment");
  r.get("random_chunk", c.random_chunk).get("gain_jitter", c.gain_jitter).get("gain_db", c.gain_db);
  r.get("background_mix", c.background_mix).get("snr_min_db", c.snr_min_db).get("snr_max_db", c.snr_max_db);
  r.get("spec_mask", c.spec_mask).get("time_masks", c.time_masks).get("max_time_width", c.max_time_width);
  r.get("mel_masks", c.mel_masks).get("max_mel_width", c.max_mel_width);
}

void to_json(json& j, const SslTrainConfig& c) {
  j = json{{"batch_size", c.batch_size},   {"epochs", c.epochs},
           {"temperature", c.temperature}, {"base_lr", c.base_lr},
           {"momentum", c.momentum},       {"weight_decay", c.weight_decay},
           {"replay_fraction", c.replay_fraction}, {"workers", c.workers},
           {"seed", c.seed},               {"augment", c.augment}};
}
void from_json(const json& j, SslTrainConfig& c) {
  Reader r(j, "ssl");
  r.get("batch_size", c.batch_size).get("epochs", c.epochs).get("temperature", c.temperature);
  r.get("base_lr", c.base_lr).get("momentum", c.momentum).get("weight_decay", c.weight_decay);
  r.get("replay_fraction", c.replay_fraction).get("workers", c.workers).get("seed", c.seed);
  r.get("augment", c.augment);
}

void to_json(json& j, const FineTuneStrategy& c) {
  j = json{{"kind", to_string(c.kind)},          {"head_lr", c.head_lr},
           {"encoder_lr", c.encoder_lr},         {"warmup_epochs", c.warmup_epochs},
           {"epochs", c.epochs},                 {"plateau_patience", c.plateau_patience},
           {"plateau_factor", c.plateau_factor}, {"batch_size", c.batch_size}};
}
void from_json(const json& j, FineTuneStrategy& c) {
  std::string kind(to_string(c.kind));
  Reader r(j, "strategy");
  r.get("kind", kind).get("head_lr", c.head_lr).get("encoder_lr", c.encoder_lr);
  r.get("warmup_epochs", c.warmup_epochs).get("epochs", c.epochs);
  r.get("plateau_patience", c.plateau_patience).get("plateau_factor", c.plateau_factor);
  r.get("batch_size", c.batch_size);
  c.kind = parse_strategy(kind);
}

void to_json(json& j, const GridSearchSpec& c) {
  j = json{{"head_lrs", c.head_lrs}, {"encoder_lrs", c.encoder_lrs},
           {"max_encoder_ratio", c.max_encoder_ratio}};
}
void from_json(const json& j, GridSearchSpec& c) {
  Reader r(j, "grid");
  r.get("head_lrs", c.head_lrs).get("encoder_lrs", c.encoder_lrs).get("max_encoder_ratio", c.max_encoder_ratio);
}

void to_json(json& j, const SplitFractions& c) {
  j = json{{"train", c.train}, {"val", c.val}, {"test", c.test}};
}
void from_json(const json& j, SplitFractions& c) {
  Reader r(j, "split");
  r.get("train", c.train).get("val", c.val).get("test", c.test);
}

void to_json(json& j, const CrySynthSpec& c) {
  j = json{{"classes", c.classes},
           {"patients_per_class", c.patients_per_class},
           {"recordings_per_patient", c.recordings_per_patient},
           {"unlabeled_patients", c.unlabeled_patients},
           {"min_duration_s", c.min_duration_s},
           {"max_duration_s", c.max_duration_s},
           {"f0_bands", c.f0_bands},
           {"am_rates", c.am_rates},
           {"am_depth", c.am_depth},
           {"sample_rate", c.sample_rate},
           {"seed", c.seed}};
}
void from_json(const json& j, CrySynthSpec& c) {
  Reader r(j, "cry");
  r.get("classes", c.classes).get("patients_per_class", c.patients_per_class);
  r.get("recordings_per_patient", c.recordings_per_patient).get("unlabeled_patients", c.unlabeled_patients);
  r.get("min_duration_s", c.min_duration_s).get("max_duration_s", c.max_duration_s);
  r.get("f0_bands", c.f0_bands).get("am_rates", c.am_rates).get("am_depth", c.am_depth);
  r.get("sample_rate", c.sample_rate).get("seed", c.seed);
}

void to_json(json& j, const GeneralSynthSpec& c) {
  j = json{{"clips", c.clips},
           {"min_duration_s", c.min_duration_s},
           {"max_duration_s", c.max_duration_s},
           {"sample_rate", c.sample_rate},
           {"seed", c.seed}};
}
void from_json(const json& j, GeneralSynthSpec& c) {
  Reader r(j, "general");
  r.get("clips", c.clips).get("min_duration_s", c.min_duration_s).get("max_duration_s", c.max_duration_s);
  r.get("sample_rate", c.sample_rate).get("seed", c.seed);
}

RunConfig::RunConfig() {
  pretrain.batch_size = 32;
  pretrain.epochs = 100;
  adapt.batch_size = 200;
  adapt.epochs = 100;
  adapt.replay_fraction = 0.5;
}

void RunConfig::validate() const {
  if (!(scale > 0.0 && scale <= 1.0)) throw ConfigError("run: scale must lie in (0, 1]");
  if (workers != 1) throw ConfigError("run: only single-worker loading is supported");
  if (output_dir.empty()) throw ConfigError("run: output_dir is empty");
  frontend.validate();
  encoder.validate();
  projection.validate();
  if (encoder.input_mels != frontend.n_mels)
    throw ConfigError("run: encoder.input_mels must equal frontend.n_mels");
  TaskSpec::by_name(data.task);
  pretrain.validate();
  adapt.validate();
  finetune.strategy.validate();
  if (finetune.grid_search) finetune.grid.validate();
  if (finetune.source != "auto" && finetune.source != "pretrained" &&
      finetune.source != "cry_adapted" && finetune.source != "initialized")
    throw ConfigError("run: finetune.source must be auto, pretrained, cry_adapted or initialized");
  if (evaluate.repeats < 1) throw ConfigError("run: evaluate.repeats must be >= 1");
  SweepConfig sc;
  sc.fractions = sweep.fractions;
  sc.seeds = sweep.seeds;
  sc.strategies = sweep.strategies;
  sc.validate();
  for (const auto& v : sweep.variants)
    if (v != "pretrained" && v != "cry_adapted" && v != "initialized")
      throw ConfigError("run: unknown sweep variant '" + v + "'");
}

int scale_count(int value, double scale, int floor) {
  return std::max(floor, static_cast<int>(std::llround(value * scale)));
}

RunConfig RunConfig::resolved() const {
  validate();
  RunConfig r = *this;
  auto scale_ssl = [&](SslTrainConfig& s, const char* tag) {
    s.batch_size = scale_count(s.batch_size, scale, 8);
    s.epochs = scale_count(s.epochs, scale, 2);
    s.seed = derive_seed(seed, tag);
  };
  auto scale_ft = [&](FineTuneStrategy& s) {
    s.batch_size = scale_count(s.batch_size, scale, 8);
    s.epochs = scale_count(s.epochs, scale, 2);
    s.warmup_epochs = scale_count(s.warmup_epochs, scale, 1);
  };
  scale_ssl(r.pretrain, "pretrain");
  scale_ssl(r.adapt, "adapt");
  scale_ft(r.finetune.strategy);
  if (r.sweep.strategies.empty()) {
    FineTuneStrategy lbn = r.finetune.strategy, e2e = r.finetune.strategy;
    lbn.kind = StrategyKind::kLinearBn;
    e2e.kind = StrategyKind::kEndToEnd;
    r.sweep.strategies = {lbn, e2e};
  } else {
    for (auto& s : r.sweep.strategies) scale_ft(s);
  }
  r.scale = 1.0;
  return r;
}

void to_json(json& j, const RunConfig& c) {
  json sweep_strats = json::array();
  for (const auto& s : c.sweep.strategies) sweep_strats.push_back(s);
  j = json{{"seed", c.seed},
           {"scale", c.scale},
           {"workers", c.workers},
           {"output_dir", c.output_dir},
           {"frontend", c.frontend},
           {"encoder", c.encoder},
           {"projection", c.projection},
           {"data",
            {{"cry_manifest", c.data.cry_manifest},
             {"general_manifest", c.data.general_manifest},
             {"task", c.data.task},
             {"split", c.data.split},
             {"keep_manifest_split", c.data.keep_manifest_split}}},
           {"pretrain", c.pretrain},
           {"adapt_enabled", c.adapt_enabled},
           {"adapt", c.adapt},
           {"finetune",
            {{"strategy", c.finetune.strategy},
             {"grid_search", c.finetune.grid_search},
             {"grid", c.finetune.grid},
             {"tap", to_string(c.finetune.tap)},
             {"source", c.finetune.source}}},
           {"evaluate", {{"repeats", c.evaluate.repeats}}},
           {"sweep",
            {{"fractions", c.sweep.fractions},
             {"seeds", c.sweep.seeds},
             {"strategies", sweep_strats},
             {"variants", c.sweep.variants}}}};
}

void from_json(const json& j, RunConfig& c) {
  json data = json::object(), finetune = json::object(), evaluate = json::object(), sweep = json::object();
  {
    Reader r(j, "run");
    r.get("seed", c.seed).get("scale", c.scale).get("workers", c.workers).get("output_dir", c.output_dir);
    r.get("frontend", c.frontend).get("encoder", c.encoder).get("projection", c.projection);
    r.get("data", data).get("pretrain", c.pretrain).get("adapt_enabled", c.adapt_enabled);
    r.get("adapt", c.adapt).get("finetune", finetune).get("evaluate", evaluate).get("sweep", sweep);
  }
  {
    Reader r(data, "data");
    r.get("cry_manifest", c.data.cry_manifest).get("general_manifest", c.data.general_manifest);
    r.get("task", c.data.task).get("split", c.data.split).get("keep_manifest_split", c.data.keep_manifest_split);
  }
  {
    json tap = std::string(to_string(c.finetune.tap));
    Reader r(finetune, "finetune");
    r.get("strategy", c.finetune.strategy).get("grid_search", c.finetune.grid_search);
    r.get("grid", c.finetune.grid).get("tap", tap).get("source", c.finetune.source);
    c.finetune.tap = parse_head_tap(get_string(tap, "finetune.tap"));
  }
  {
    Reader r(evaluate, "evaluate");
    r.get("repeats", c.evaluate.repeats);
  }
  {
    Reader r(sweep, "sweep");
    r.get("fractions", c.sweep.fractions).get("seeds", c.sweep.seeds);
    r.get("strategies", c.sweep.strategies).get("variants", c.sweep.variants);
  }
}

RunConfig parse_run_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  RunConfig c = j.get<RunConfig>();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("config file not found: " + path);
  return parse_run_config(read_text_file(path));
}

std::string format_run_config(const RunConfig& c) { return json(c).dump(2) + "\n"; }

}  // namespace cryssl
