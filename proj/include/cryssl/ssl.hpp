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

#include "cryssl/audio_library.hpp"
#include "cryssl/augment.hpp"
#include "cryssl/catalog.hpp"
#include "cryssl/checkpoint.hpp"
#include "cryssl/encoder.hpp"

namespace cryssl {

struct SslTrainConfig {
  int batch_size = 32;
  int epochs = 100;
  double temperature = 0.1;
  // SGD peak learning rate is base_lr * batch_size / 256, decayed with a
  // cosine over all steps of the run.
  double base_lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double replay_fraction = 0.0;
  int workers = 1;
  std::uint64_t seed = 0;
  AugmentationChain augment;

  double peak_lr() const { return base_lr * batch_size / 256.0; }
  void validate() const;
};

struct SslStepMetrics {
  long step = 0;
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct SslRunOptions {
  std::string metrics_path;    // JSON Lines {step, epoch, loss, lr}; empty: none
  std::string diagnostic_dir;  // where a diverged run dumps its checkpoint
};

struct SslResult {
  Checkpoint checkpoint;
  std::vector<SslStepMetrics> trace;
  std::vector<std::string> pool_ids;
  // Digest of the pool membership each epoch sampled from.
  std::vector<std::uint64_t> epoch_pool_digests;
};

// The fixed general-audio subset replayed during adaptation: round(fraction
// * |general|) recordings chosen once by a seeded shuffle, reported in
// manifest order.
struct ReplayBuffer {
  std::vector<std::string> replay_ids;

  static ReplayBuffer build(const Manifest& general, double fraction, std::uint64_t seed);
};

struct AdaptationPool {
  std::vector<std::string> cry_ids;
  std::vector<std::string> replay_ids;

  std::size_t size() const { return cry_ids.size() + replay_ids.size(); }
};

AdaptationPool build_adaptation_pool(const Manifest& cry_pool, const Manifest& general_pool,
                                     double replay_fraction, std::uint64_t seed);

// SimCLR over `corpus`: per step, sample a batch, draw two views of each clip,
// encode, project, NT-Xent, SGD. Drops the incomplete last batch of an epoch.
// Deterministic for fixed seeds (single worker).
SslResult ssl_pretrain(const Manifest& corpus, Encoder<float>& model, const SslTrainConfig& cfg,
                       AudioLibrary& audio, const SslRunOptions& opts = {});

// Continues SimCLR from a pretrained checkpoint (encoder and projection head
// reused) on cry_pool plus the replay subset of general_pool.
SslResult cry_adapt(const Manifest& cry_pool, const Manifest& general_pool,
                    const Checkpoint& pretrained, const SslTrainConfig& cfg, AudioLibrary& audio,
                    const SslRunOptions& opts = {});

}  // namespace cryssl
