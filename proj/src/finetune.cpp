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

#include "cryssl/finetune.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "cryssl/config.hpp"
#include "cryssl/error.hpp"
#include "cryssl/metrics.hpp"
#include "cryssl/optim.hpp"

namespace cryssl {

std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::kLinear: return "linear";
    case StrategyKind::kLinearBn: return "linear_bn";
    case StrategyKind::kEndToEnd: return "end_to_end";
  }
  return "?";
}

StrategyKind parse_strategy(std::string_view s) {
  if (s == "linear") return StrategyKind::kLinear;
  if (s == "linear_bn") return StrategyKind::kLinearBn;
  if (s == "end_to_end") return StrategyKind::kEndToEnd;
  throw ConfigError("unknown fine-tuning strategy '" + std::string(s) + "'");
}

void FineTuneStrategy::validate() const {
  if (!(head_lr > 0.0)) throw ConfigError("finetune: head_lr must be positive");
  if (kind == StrategyKind::kEndToEnd) {
    if (!(encoder_lr > 0.0)) throw ConfigError("finetune: encoder_lr must be positive");
    if (!(encoder_lr < head_lr)) throw ConfigError("finetune: encoder_lr must be below head_lr");
  }
  if (warmup_epochs < 1) throw ConfigError("finetune: warmup_epochs must be >= 1");
  if (epochs < 1) throw ConfigError("finetune: epochs must be >= 1");
  if (plateau_patience < 1) throw ConfigError("finetune: plateau_patience must be >= 1");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0))
    throw ConfigError("finetune: plateau_factor must lie in (0, 1)");
  if (batch_size < 2) throw ConfigError("finetune: batch_size must be >= 2");
}

template <typename T>
Trainability build_trainability(const FineTuneStrategy& strategy, Encoder<T>& model) {
  Trainability t;
  for (auto* p : model.parameters()) {
    const bool known = p->name.rfind("bn0.", 0) == 0 || p->name.rfind("blocks.", 0) == 0 ||
                       p->name.rfind("proj.", 0) == 0;
    if (!known) throw ValidationError("unclassified encoder tensor '" + p->name + "'");
    const bool learned = p->kind != nn::ParamKind::kBnStat;
    p->trainable = learned && strategy.kind == StrategyKind::kEndToEnd;
    (p->trainable ? t.trainable : t.frozen).push_back(p->name);
  }
  t.bn_stats_update = strategy.kind != StrategyKind::kLinear;
  t.bn_updating_layers = t.bn_stats_update ? model.bn_layer_count() : 0;
  return t;
}

template Trainability build_trainability(const FineTuneStrategy&, Encoder<float>&);
template Trainability build_trainability(const FineTuneStrategy&, Encoder<double>&);

bool PlateauController::observe(double val_loss) {
  if (!seen_ || val_loss < best_) {
    best_ = val_loss;
    seen_ = true;
    bad_ = 0;
    return false;
  }
  if (++bad_ < patience_) return false;
  bad_ = 0;
  scale_ *= factor_;
  ++reductions_;
  return true;
}

LrPair lr_at(int epoch, const FineTuneStrategy& strategy, double plateau_scale) {
  LrPair r;
  r.head = strategy.head_lr * plateau_scale;
  if (strategy.kind == StrategyKind::kEndToEnd) {
    const double ramp =
        std::min(static_cast<double>(epoch) / static_cast<double>(strategy.warmup_epochs), 1.0);
    r.encoder = strategy.encoder_lr * ramp * plateau_scale;
  }
  return r;
}

namespace {

struct LabeledSet {
  std::vector<RecordingMeta> records;
  std::vector<int> labels;
};

LabeledSet labeled(const Manifest& data, const TaskSpec& task, Split split,
                   const std::optional<std::vector<std::string>>& subset) {
  std::set<std::string> keep;
  if (subset) keep.insert(subset->begin(), subset->end());
  LabeledSet s;
  for (const auto& r : data.with_split(split)) {
    if (subset && !keep.count(r.recording_id)) continue;
    if (auto y = task.label(r)) {
      s.records.push_back(r);
      s.labels.push_back(*y);
    }
  }
  return s;
}

nn::Tensor<float> tap_batch(Encoder<float>& model, const nn::Tensor<float>& x, nn::Mode mode,
                            bool keep_cache, HeadTap tap) {
  auto emb = model.forward_backbone(x, mode, keep_cache);
  if (tap == HeadTap::kBackboneEmbedding) return emb;
  return model.forward_projection(emb, keep_cache, false).layer1;
}

// Softmax cross-entropy averaged over rows; fills dlogits when given.
double softmax_xent(const nn::Tensor<float>& logits, std::span<const int> labels,
                    nn::Tensor<float>* dlogits, std::vector<double>* proba = nullptr) {
  const int n = logits.dim(0), k = logits.dim(1);
  if (dlogits) *dlogits = nn::Tensor<float>({n, k});
  if (proba) proba->assign(static_cast<std::size_t>(n) * k, 0.0);
  double loss = 0.0;
  std::vector<double> p(k);
  for (int i = 0; i < n; ++i) {
    const float* row = logits.ptr() + static_cast<std::size_t>(i) * k;
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j]));
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += (p[j] = std::exp(row[j] - mx));
    for (int j = 0; j < k; ++j) p[j] /= z;
    if (!labels.empty()) loss -= std::log(std::max(p[labels[i]], 1e-300));
    for (int j = 0; j < k; ++j) {
      if (dlogits)
        dlogits->data[static_cast<std::size_t>(i) * k + j] =
            static_cast<float>((p[j] - (j == labels[i] ? 1.0 : 0.0)) / n);
      if (proba) (*proba)[static_cast<std::size_t>(i) * k + j] = p[j];
    }
  }
  return loss / n;
}

[[noreturn]] void diverge(Encoder<float>& model, nn::Linear<float>& head,
                          const FineTuneOptions& opts, int epoch) {
  std::string diag;
  if (!opts.diagnostic_dir.empty()) {
    diag = (std::filesystem::path(opts.diagnostic_dir) /
            ("diagnostic_finetune_epoch" + std::to_string(epoch) + ".ckpt"))
               .string();
    Checkpoint c = make_checkpoint(model, kStageFinetuned, &head);
    c.metadata["aborted"] = true;
    save_checkpoint(c, diag);
  }
  throw DivergenceError("finetune: non-finite loss in epoch " + std::to_string(epoch), diag);
}

}  // namespace

std::vector<double> predict_proba(Encoder<float>& model, nn::Linear<float>& head, HeadTap tap,
                                  const Manifest& data, std::span<const RecordingMeta> records,
                                  AudioLibrary& audio) {
  const int k = head.out_features();
  std::vector<double> out;
  out.reserve(records.size() * k);
  const int min_frames = model.config().min_frames();
  for (const auto& r : records) {
    const auto feat = model.tap_features(audio.full_mel(data, r, min_frames), tap);
    nn::Tensor<float> x({1, static_cast<int>(feat.size())});
    std::copy(feat.begin(), feat.end(), x.data.begin());
    std::vector<double> p;
    softmax_xent(head.forward(x, false), {}, nullptr, &p);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<double> predict_proba(const Checkpoint& finetuned, const Manifest& data,
                                  std::span<const RecordingMeta> records, AudioLibrary& audio) {
  if (!finetuned.has_head())
    throw ValidationError("checkpoint stage '" + finetuned.stage + "' has no classifier head");
  Encoder<float> model = encoder_from<float>(finetuned);
  nn::Linear<float> head("head", model.tap_dim(finetuned.head_tap), finetuned.head_classes);
  restore(finetuned, model, &head);
  return predict_proba(model, head, finetuned.head_tap, data, records, audio);
}

FineTuneResult train_supervised(const Checkpoint& start, const TaskSpec& task,
                                const Manifest& data, const FineTuneStrategy& strategy,
                                std::uint64_t seed, AudioLibrary& audio,
                                const FineTuneOptions& opts) {
  strategy.validate();
  const int k = task.num_classes();
  const auto train = labeled(data, task, Split::kTrain, opts.train_subset);
  const auto val = labeled(data, task, Split::kVal, std::nullopt);
  if (train.records.empty()) throw ValidationError("finetune: no labelled train recordings");
  if (val.records.empty()) throw ValidationError("finetune: no labelled val recordings");

  Encoder<float> model = encoder_from<float>(start);
  build_trainability(strategy, model);
  Rng rng(seed);
  nn::Linear<float> head("head", model.tap_dim(opts.tap), k);
  // Zero start: the first updates follow the class-mean feature difference.
  for (auto* p : {&head.weight(), &head.bias()}) std::fill(p->value.begin(), p->value.end(), 0.0f);

  const bool e2e = strategy.kind == StrategyKind::kEndToEnd;
  const nn::Mode train_mode = strategy.kind == StrategyKind::kLinear ? nn::Mode::kEval : nn::Mode::kTrain;
  const std::size_t batch = static_cast<std::size_t>(strategy.batch_size);
  const std::size_t steps = (train.records.size() + batch - 1) / batch;
  WeightedSampler sampler(train.labels, k);

  std::vector<const Waveform*> waves;
  for (const auto& r : train.records) waves.push_back(&audio.waveform(data, r));
  const auto& fe = audio.frontend();

  std::vector<nn::Param<float>*> head_params{&head.weight(), &head.bias()};
  auto enc_params = model.parameters();
  Adam<float> head_opt, enc_opt;
  PlateauController plateau(strategy.plateau_patience, strategy.plateau_factor);

  std::ofstream hist;
  if (!opts.history_path.empty()) {
    std::filesystem::path hp(opts.history_path);
    if (hp.has_parent_path()) std::filesystem::create_directories(hp.parent_path());
    hist.open(opts.history_path, std::ios::trunc);
  }

  FineTuneResult res;
  bool have_best = false;
  for (int epoch = 1; epoch <= strategy.epochs; ++epoch) {
    const LrPair lr = lr_at(epoch, strategy, plateau.scale());
    double train_loss = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      std::vector<MelSpectrogram> mels(batch);
      std::vector<int> y(batch);
      for (std::size_t b = 0; b < batch; ++b) {
        const auto i = sampler.draw(rng);
        y[b] = train.labels[i];
        mels[b] = log_mel(random_chunk(*waves[i], fe.chunk_s, rng), fe);
      }
      const auto x = stack_mels<float>(mels);
      model.zero_grad();
      head.weight().zero_grad();
      head.bias().zero_grad();
      const auto feats = tap_batch(model, x, train_mode, e2e, opts.tap);
      const auto logits = head.forward(feats, true);
      nn::Tensor<float> dlogits;
      const double loss = softmax_xent(logits, y, &dlogits);
      if (!std::isfinite(loss)) diverge(model, head, opts, epoch);
      train_loss += loss;
      auto dfeat = head.backward(dlogits, e2e);
      head_opt.step(head_params, lr.head);
      if (e2e) {
        nn::Tensor<float> demb = opts.tap == HeadTap::kBackboneEmbedding
                                     ? std::move(dfeat)
                                     : model.backward_projection(&dfeat, nullptr);
        model.backward_backbone(demb);
        enc_opt.step(enc_params, lr.encoder);
      }
      model.clear_caches();
      head.clear_cache();
    }
    train_loss /= static_cast<double>(steps);

    const auto proba = predict_proba(model, head, opts.tap, data, val.records, audio);
    double val_loss = 0.0;
    for (std::size_t i = 0; i < val.records.size(); ++i)
      val_loss -= std::log(std::max(proba[i * k + val.labels[i]], 1e-300));
    val_loss /= static_cast<double>(val.records.size());
    if (!std::isfinite(val_loss)) diverge(model, head, opts, epoch);
    double val_auc = 0.5;
    try {
      val_auc = macro_ovr_auc(proba, val.labels, k);
    } catch (const ValidationError&) {
      spdlog::warn("finetune: validation split lacks a class; AUC recorded as 0.5");
    }

    EpochRecord rec{epoch, train_loss, val_loss, val_auc, lr.head, lr.encoder};
    res.history.push_back(rec);
    if (hist.is_open())
      hist << nlohmann::json{{"epoch", epoch}, {"train_loss", train_loss}, {"val_loss", val_loss},
                             {"val_auc", val_auc}, {"head_lr", lr.head}, {"encoder_lr", lr.encoder}}
                  .dump()
           << "\n";
    spdlog::debug("finetune {} epoch {} train {:.4f} val {:.4f} auc {:.4f}", to_string(strategy.kind),
                  epoch, train_loss, val_loss, val_auc);

    if (!have_best || val_auc > res.best_val_auc) {
      have_best = true;
      res.best_val_auc = val_auc;
      res.best_epoch = epoch;
      res.checkpoint = make_checkpoint(model, kStageFinetuned, &head);
    }
    plateau.observe(val_loss);
  }

  auto& c = res.checkpoint;
  c.head_tap = opts.tap;
  for (const auto& [key, v] : start.seeds) c.seeds.emplace(key, v);
  c.seeds["finetune"] = seed;
  for (const auto& [key, v] : start.config_hashes)
    if (key != "encoder") c.config_hashes.emplace(key, v);
  c.config_hashes["finetune"] = config_hash(nlohmann::json(strategy));
  c.metadata["task"] = task.name_str();
  c.metadata["strategy"] = to_string(strategy.kind);
  c.metadata["source_stage"] = start.stage;
  c.metadata["best_epoch"] = res.best_epoch;
  c.metadata["best_val_auc"] = res.best_val_auc;
  c.metadata["train_recordings"] = train.records.size();
  return res;
}

void GridSearchSpec::validate() const {
  if (head_lrs.empty()) throw ConfigError("grid: empty head_lr grid");
  if (encoder_lrs.empty()) throw ConfigError("grid: empty encoder_lr grid");
  for (double v : head_lrs)
    if (!(v > 0.0)) throw ConfigError("grid: learning rates must be positive");
  for (double v : encoder_lrs)
    if (!(v > 0.0)) throw ConfigError("grid: learning rates must be positive");
}

std::vector<std::pair<double, double>> GridSearchSpec::cells(StrategyKind kind) const {
  validate();
  std::vector<std::pair<double, double>> out;
  for (double h : head_lrs) {
    if (kind != StrategyKind::kEndToEnd) {
      out.emplace_back(h, 0.0);
      continue;
    }
    for (double e : encoder_lrs)
      if (e <= h * max_encoder_ratio * (1.0 + 1e-12)) out.emplace_back(h, e);
  }
  if (out.empty()) throw ConfigError("grid: no (head_lr, encoder_lr) pair satisfies the ratio bound");
  return out;
}

std::size_t select_best_cell(std::span<const GridCell> cells) {
  if (cells.empty()) throw ValidationError("grid: empty result table");
  std::size_t best = 0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const auto& a = cells[i];
    const auto& b = cells[best];
    if (a.val_auc > b.val_auc ||
        (a.val_auc == b.val_auc &&
         (a.head_lr < b.head_lr || (a.head_lr == b.head_lr && a.encoder_lr < b.encoder_lr))))
      best = i;
  }
  return best;
}

GridSearchResult grid_search(const Checkpoint& model, const TaskSpec& task, const Manifest& data,
                             const FineTuneStrategy& base, const GridSearchSpec& spec,
                             std::uint64_t seed, AudioLibrary& audio,
                             const FineTuneOptions& opts) {
  GridSearchResult out;
  std::size_t best = 0;
  for (const auto& [h, e] : spec.cells(base.kind)) {
    FineTuneStrategy s = base;
    s.head_lr = h;
    if (base.kind == StrategyKind::kEndToEnd) s.encoder_lr = e;
    FineTuneOptions o = opts;
    o.history_path.clear();
    auto run = train_supervised(model, task, data, s, seed, audio, o);
    out.table.push_back({h, e, run.best_val_auc});
    spdlog::info("grid {} head_lr {:g} encoder_lr {:g}: val AUC {:.4f}", to_string(base.kind), h, e,
                 run.best_val_auc);
    best = select_best_cell(out.table);
    if (best == out.table.size() - 1) out.best_run = std::move(run);
  }
  out.best = base;
  out.best.head_lr = out.table[best].head_lr;
  if (base.kind == StrategyKind::kEndToEnd) out.best.encoder_lr = out.table[best].encoder_lr;
  return out;
}

}  // namespace cryssl
