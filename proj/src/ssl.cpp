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

#include "cryssl/ssl.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "cryssl/config.hpp"
#include "cryssl/contrastive.hpp"
#include "cryssl/error.hpp"
#include "cryssl/optim.hpp"

namespace cryssl {

void SslTrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("ssl: batch_size must be >= 2");
  if (epochs < 1) throw ConfigError("ssl: epochs must be >= 1");
  if (!(temperature > 0.0)) throw ConfigError("ssl: temperature must be positive");
  if (!(base_lr > 0.0)) throw ConfigError("ssl: base_lr must be positive");
  if (replay_fraction < 0.0 || replay_fraction > 1.0)
    throw ConfigError("ssl: replay_fraction must lie in [0, 1]");
  if (workers != 1) throw ConfigError("ssl: only single-worker loading is supported");
}

ReplayBuffer ReplayBuffer::build(const Manifest& general, double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0)
    throw ValidationError("replay fraction must lie in [0, 1]");
  const auto n = general.records.size();
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  ReplayBuffer b;
  for (auto i : idx) b.replay_ids.push_back(general.records[i].recording_id);
  return b;
}

AdaptationPool build_adaptation_pool(const Manifest& cry_pool, const Manifest& general_pool,
                                     double replay_fraction, std::uint64_t seed) {
  if (cry_pool.records.empty()) throw ValidationError("cry_adapt: empty cry pool");
  AdaptationPool p;
  for (const auto& r : cry_pool.records) p.cry_ids.push_back(r.recording_id);
  if (replay_fraction > 0.0)
    p.replay_ids = ReplayBuffer::build(general_pool, replay_fraction, seed).replay_ids;
  return p;
}

namespace {

struct PoolItem {
  std::string id;
  const Waveform* wave;
};

std::uint64_t pool_digest(const std::vector<PoolItem>& pool) {
  std::set<std::string> ids;
  for (const auto& p : pool) ids.insert(p.id);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& id : ids) h = fnv1a64(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(id.data()), id.size()), h ^ 0xff);
  return h;
}

SslResult run_simclr(const std::vector<PoolItem>& pool, Encoder<float>& model,
                     const SslTrainConfig& cfg, const FrontendConfig& frontend,
                     const SslRunOptions& opts, std::string_view stage) {
  cfg.validate();
  if (pool.size() < 2) throw ValidationError("ssl: need at least 2 clips in the training pool");
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), pool.size());
  const std::size_t steps_per_epoch = pool.size() / batch;
  const long total_steps = static_cast<long>(steps_per_epoch) * cfg.epochs;

  for (auto* p : model.parameters()) p->trainable = p->kind != nn::ParamKind::kBnStat;
  auto params = model.parameters();
  Sgd<float> opt(cfg.momentum, cfg.weight_decay);
  Rng rng(cfg.seed);

  std::ofstream metrics;
  if (!opts.metrics_path.empty()) {
    std::filesystem::path mp(opts.metrics_path);
    if (mp.has_parent_path()) std::filesystem::create_directories(mp.parent_path());
    metrics.open(opts.metrics_path, std::ios::app);
  }

  SslResult result;
  for (const auto& p : pool) result.pool_ids.push_back(p.id);
  std::vector<std::size_t> order(pool.size());
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    result.epoch_pool_digests.push_back(pool_digest(pool));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      std::vector<const Waveform*> members(batch);
      for (std::size_t b = 0; b < batch; ++b) members[b] = pool[order[s * batch + b]].wave;
      std::vector<MelSpectrogram> views(2 * batch);
      std::vector<const Waveform*> others;
      for (std::size_t b = 0; b < batch; ++b) {
        others.clear();
        for (std::size_t o = 0; o < batch; ++o)
          if (o != b) others.push_back(members[o]);
        auto [v1, v2] = make_views(*members[b], others, cfg.augment, frontend, rng);
        views[b] = std::move(v1);
        views[b + batch] = std::move(v2);
      }
      const auto x = stack_mels<float>(views);
      model.zero_grad();
      auto emb = model.forward_backbone(x, nn::Mode::kTrain, true);
      auto proj = model.forward_projection(emb, true, true);
      const auto& zt = proj.final;
      Eigen::MatrixXd z(zt.dim(0), zt.dim(1));
      for (int i = 0; i < zt.dim(0); ++i)
        for (int j = 0; j < zt.dim(1); ++j)
          z(i, j) = zt.data[static_cast<std::size_t>(i) * zt.dim(1) + j];
      const double lr = cosine_lr(cfg.peak_lr(), step, total_steps);
      NtXentResult loss;
      bool finite = z.allFinite();
      if (finite) {
        loss = nt_xent_loss(z, cfg.temperature, true);
        finite = std::isfinite(loss.loss) && loss.grad.allFinite();
      }
      if (!finite) {
        std::string diag;
        if (!opts.diagnostic_dir.empty()) {
          diag = (std::filesystem::path(opts.diagnostic_dir) /
                  ("diagnostic_" + std::string(stage) + "_step" + std::to_string(step) + ".ckpt"))
                     .string();
          Checkpoint c = make_checkpoint(model, stage);
          c.metadata["aborted"] = true;
          c.metadata["step"] = step;
          save_checkpoint(c, diag);
        }
        model.clear_caches();
        throw DivergenceError("ssl: non-finite loss at step " + std::to_string(step), diag);
      }
      nn::Tensor<float> dz(zt.shape);
      for (int i = 0; i < zt.dim(0); ++i)
        for (int j = 0; j < zt.dim(1); ++j)
          dz.data[static_cast<std::size_t>(i) * zt.dim(1) + j] = static_cast<float>(loss.grad(i, j));
      auto d_emb = model.backward_projection(nullptr, &dz);
      model.backward_backbone(d_emb);
      opt.step(params, lr);
      model.clear_caches();

      result.trace.push_back({step, epoch, loss.loss, lr});
      if (metrics.is_open())
        metrics << nlohmann::json{{"stage", stage}, {"step", step}, {"epoch", epoch},
                                  {"loss", loss.loss}, {"lr", lr}}.dump()
                << "\n";
      spdlog::debug("{} epoch {} step {} loss {:.5f} lr {:.5g}", stage, epoch, step, loss.loss, lr);
    }
  }
  result.checkpoint = make_checkpoint(model, stage);
  result.checkpoint.config_hashes["ssl"] = config_hash(nlohmann::json(cfg));
  result.checkpoint.config_hashes["frontend"] = config_hash(nlohmann::json(frontend));
  result.checkpoint.seeds[std::string(stage) == std::string(kStageCryAdapted) ? "adapt" : "pretrain"] = cfg.seed;
  result.checkpoint.metadata["steps"] = step;
  result.checkpoint.metadata["pool_size"] = pool.size();
  return result;
}

}  // namespace

SslResult ssl_pretrain(const Manifest& corpus, Encoder<float>& model, const SslTrainConfig& cfg,
                       AudioLibrary& audio, const SslRunOptions& opts) {
  cfg.validate();
  if (corpus.records.empty()) throw ValidationError("ssl_pretrain: empty corpus");
  std::vector<PoolItem> pool;
  for (const auto& r : corpus.records) pool.push_back({r.recording_id, &audio.waveform(corpus, r)});
  return run_simclr(pool, model, cfg, audio.frontend(), opts, kStagePretrained);
}

SslResult cry_adapt(const Manifest& cry_pool, const Manifest& general_pool,
                    const Checkpoint& pretrained, const SslTrainConfig& cfg, AudioLibrary& audio,
                    const SslRunOptions& opts) {
  cfg.validate();
  if (pretrained.stage != kStagePretrained)
    throw ValidationError("cry_adapt: expected a '" + std::string(kStagePretrained) +
                          "' checkpoint, got '" + pretrained.stage + "'");
  const auto ids = build_adaptation_pool(cry_pool, general_pool, cfg.replay_fraction,
                                         derive_seed(cfg.seed, "replay"));
  std::vector<PoolItem> pool;
  for (const auto& r : cry_pool.records)
    pool.push_back({r.recording_id, &audio.waveform(cry_pool, r)});
  std::set<std::string> replay(ids.replay_ids.begin(), ids.replay_ids.end());
  for (const auto& r : general_pool.records)
    if (replay.count(r.recording_id))
      pool.push_back({"replay:" + r.recording_id, &audio.waveform(general_pool, r)});

  Encoder<float> model = encoder_from<float>(pretrained);
  SslResult res = run_simclr(pool, model, cfg, audio.frontend(), opts, kStageCryAdapted);
  for (const auto& [k, v] : pretrained.seeds) res.checkpoint.seeds.emplace(k, v);
  for (const auto& [k, v] : pretrained.config_hashes)
    if (k != "ssl") res.checkpoint.config_hashes.emplace("pretrain_" + k, v);
  res.checkpoint.metadata["replay_clips"] = ids.replay_ids.size();
  res.checkpoint.metadata["cry_clips"] = ids.cry_ids.size();
  return res;
}

}  // namespace cryssl
