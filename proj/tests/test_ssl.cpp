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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "cryssl/error.hpp"
#include "cryssl/optim.hpp"
#include "cryssl/ssl.hpp"
#include "cryssl/synth.hpp"

using namespace cryssl;

namespace {

Manifest general_ids(int n) {
  Manifest m;
  for (int i = 0; i < n; ++i)
    m.records.push_back({"g" + std::to_string(i), "g" + std::to_string(i), "x.wav", 5.0, {}, {}, {}});
  return m;
}

struct Corpora {
  Manifest cry, general;
};

const Corpora& corpora() {
  static const Corpora c = [] {
    CrySynthSpec cs;
    cs.patients_per_class = 3;
    cs.recordings_per_patient = 1;
    cs.seed = 1;
    GeneralSynthSpec gs;
    gs.clips = 6;
    gs.seed = 2;
    return Corpora{write_cry_corpus(cs, "ssl_corpus/cry"), write_general_corpus(gs, "ssl_corpus/general")};
  }();
  return c;
}

Encoder<float> tiny_encoder() {
  Encoder<float> enc(EncoderConfig::narrow(16), ProjectionHeadConfig::narrow(16));
  enc.init(3);
  return enc;
}

SslTrainConfig tiny_config() {
  SslTrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 2;
  cfg.base_lr = 0.5;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("replay buffer takes round(f * n) fixed clips") {
  Manifest g = general_ids(100);
  auto a = ReplayBuffer::build(g, 0.5, 4);
  CHECK(a.replay_ids.size() == 50);
  CHECK(std::set<std::string>(a.replay_ids.begin(), a.replay_ids.end()).size() == 50);
  CHECK(ReplayBuffer::build(g, 0.5, 4).replay_ids == a.replay_ids);
  CHECK(ReplayBuffer::build(g, 0.5, 5).replay_ids != a.replay_ids);
  CHECK(ReplayBuffer::build(g, 0.0, 4).replay_ids.empty());
  CHECK(ReplayBuffer::build(g, 1.0, 4).replay_ids.size() == 100);
  CHECK(ReplayBuffer::build(general_ids(7), 0.5, 1).replay_ids.size() == 4);
  CHECK_THROWS_AS(ReplayBuffer::build(g, 1.5, 4), ValidationError);
  // Reported in manifest order.
  auto sorted = a.replay_ids;
  std::sort(sorted.begin(), sorted.end(), [](const std::string& x, const std::string& y) {
    return std::stoi(x.substr(1)) < std::stoi(y.substr(1));
  });
  CHECK(sorted == a.replay_ids);
}

TEST_CASE("adaptation pool is the union of cry clips and replay") {
  Manifest cry = general_ids(30);
  for (auto& r : cry.records) r.recording_id = "c" + r.recording_id;
  auto pool = build_adaptation_pool(cry, general_ids(100), 0.5, 9);
  CHECK(pool.cry_ids.size() == 30);
  CHECK(pool.replay_ids.size() == 50);
  CHECK(pool.size() == 80);
  CHECK_THROWS_AS(build_adaptation_pool(Manifest{}, general_ids(5), 0.5, 9), ValidationError);
}

TEST_CASE("cosine schedule") {
  CHECK(cosine_lr(0.2, 0, 100) == doctest::Approx(0.2));
  CHECK(cosine_lr(0.2, 50, 100) == doctest::Approx(0.1));
  CHECK(cosine_lr(0.2, 100, 100) == doctest::Approx(0.0));
  for (long s = 1; s <= 100; ++s) CHECK(cosine_lr(0.2, s, 100) <= cosine_lr(0.2, s - 1, 100));
}

TEST_CASE("peak learning rate scales with batch size") {
  SslTrainConfig cfg;
  cfg.base_lr = 0.1;
  cfg.batch_size = 512;
  CHECK(cfg.peak_lr() == doctest::Approx(0.2));
  cfg.batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("sgd with momentum") {
  nn::Param<double> p;
  p.name = "w";
  p.value = {1.0};
  p.grad = {0.5};
  std::vector<nn::Param<double>*> ps{&p};
  Sgd<double> sgd(0.9);
  sgd.step(ps, 0.1);
  CHECK(p.value[0] == doctest::Approx(0.95));
  sgd.step(ps, 0.1);
  CHECK(p.value[0] == doctest::Approx(0.95 - 0.1 * (0.9 * 0.5 + 0.5)));
  p.trainable = false;
  sgd.step(ps, 0.1);
  CHECK(p.value[0] == doctest::Approx(0.95 - 0.095));
}

TEST_CASE("adam first step moves by lr against the gradient sign") {
  nn::Param<double> p;
  p.name = "w";
  p.value = {1.0, -2.0};
  p.grad = {3.0, -0.001};
  std::vector<nn::Param<double>*> ps{&p};
  Adam<double> adam;
  adam.step(ps, 0.01);
  CHECK(p.value[0] == doctest::Approx(0.99).epsilon(1e-6));
  CHECK(p.value[1] == doctest::Approx(-1.99).epsilon(1e-4));
}

TEST_CASE("pretraining runs, logs and is reproducible") {
  const auto& c = corpora();
  AudioLibrary audio;
  auto enc = tiny_encoder();
  SslRunOptions opts;
  opts.metrics_path = "ssl_out/metrics.jsonl";
  auto res = ssl_pretrain(c.general, enc, tiny_config(), audio, opts);
  CHECK(res.checkpoint.stage == "pretrained");
  CHECK(res.trace.size() == 2);  // 6 clips, batch 4, drop last
  for (const auto& m : res.trace) CHECK(std::isfinite(m.loss));
  CHECK(res.trace[0].lr == doctest::Approx(0.5 * 4 / 256.0));
  CHECK(res.trace[1].lr < res.trace[0].lr);
  CHECK(std::filesystem::exists("ssl_out/metrics.jsonl"));

  auto fresh = tiny_encoder();
  auto before = make_checkpoint(fresh, kStageInitialized);
  CHECK_FALSE(same_tensors(before, res.checkpoint));

  AudioLibrary audio2;
  auto enc2 = tiny_encoder();
  auto again = ssl_pretrain(c.general, enc2, tiny_config(), audio2);
  CHECK(same_tensors(again.checkpoint, res.checkpoint));
}

TEST_CASE("adaptation keeps its pool fixed across epochs") {
  const auto& c = corpora();
  AudioLibrary audio;
  auto enc = tiny_encoder();
  auto cfg = tiny_config();
  cfg.epochs = 1;
  auto pre = ssl_pretrain(c.general, enc, cfg, audio).checkpoint;

  cfg.epochs = 3;
  cfg.replay_fraction = 0.5;
  auto res = cry_adapt(c.cry, c.general, pre, cfg, audio);
  CHECK(res.checkpoint.stage == "cry_adapted");
  CHECK(res.pool_ids.size() == 6 + 3);
  int replayed = 0;
  for (const auto& id : res.pool_ids) replayed += id.rfind("replay:", 0) == 0;
  CHECK(replayed == 3);
  REQUIRE(res.epoch_pool_digests.size() == 3);
  CHECK(res.epoch_pool_digests[0] == res.epoch_pool_digests[1]);
  CHECK(res.epoch_pool_digests[1] == res.epoch_pool_digests[2]);

  auto fresh = tiny_encoder();
  auto initial = make_checkpoint(fresh, kStageInitialized);
  CHECK_THROWS_AS(cry_adapt(c.cry, c.general, initial, cfg, audio), ValidationError);
}

TEST_CASE("a diverging run stops with a diagnostic checkpoint") {
  const auto& c = corpora();
  AudioLibrary audio;
  auto enc = tiny_encoder();
  auto cfg = tiny_config();
  cfg.base_lr = 1e38;
  cfg.epochs = 5;
  SslRunOptions opts;
  opts.diagnostic_dir = "ssl_diag";
  try {
    ssl_pretrain(c.general, enc, cfg, audio, opts);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(std::filesystem::exists(e.diagnostic_path()));
  }
}
