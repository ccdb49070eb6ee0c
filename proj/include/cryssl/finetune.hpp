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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cryssl/audio_library.hpp"
#include "cryssl/catalog.hpp"
#include "cryssl/checkpoint.hpp"
#include "cryssl/encoder.hpp"

namespace cryssl {

enum class StrategyKind { kLinear, kLinearBn, kEndToEnd };
std::string_view to_string(StrategyKind k);
StrategyKind parse_strategy(std::string_view s);

struct FineTuneStrategy {
  StrategyKind kind = StrategyKind::kLinear;
  double head_lr = 1e-3;
  double encoder_lr = 1e-5;  // end_to_end only
  int warmup_epochs = 10;
  int epochs = 50;
  int plateau_patience = 3;
  double plateau_factor = 0.5;
  int batch_size = 32;

  void validate() const;
};

struct Trainability {
  std::vector<std::string> trainable;  // encoder tensors receiving updates
  std::vector<std::string> frozen;
  bool bn_stats_update = false;
  std::size_t bn_updating_layers = 0;
};

// Sets the trainable flag of every encoder tensor for `strategy`. BN running
// statistics update exactly when the encoder runs in train mode, which
// linear_bn and end_to_end do.
template <typename T>
Trainability build_trainability(const FineTuneStrategy& strategy, Encoder<T>& model);

// Counts consecutive epochs whose validation loss is not strictly below the
// best so far; when the count reaches `patience` the scale is multiplied by
// `factor` and the count restarts.
class PlateauController {
 public:
  PlateauController(int patience = 3, double factor = 0.5) : patience_(patience), factor_(factor) {}
  // Returns true when this observation triggered a reduction.
  bool observe(double val_loss);
  double scale() const { return scale_; }
  int reductions() const { return reductions_; }

 private:
  int patience_;
  double factor_;
  double best_ = 0.0;
  bool seen_ = false;
  int bad_ = 0;
  int reductions_ = 0;
  double scale_ = 1.0;
};

struct LrPair {
  double head = 0.0;
  double encoder = 0.0;
};

// Learning rates for 1-based `epoch`: head constant, encoder (end_to_end)
// target * min(epoch / warmup_epochs, 1); both times `plateau_scale`.
LrPair lr_at(int epoch, const FineTuneStrategy& strategy, double plateau_scale = 1.0);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_auc = 0.0;
  double head_lr = 0.0;
  double encoder_lr = 0.0;
};

struct FineTuneOptions {
  HeadTap tap = HeadTap::kProjectionLayer1;
  // Restricts training to these recording ids (label-fraction sweeps).
  std::optional<std::vector<std::string>> train_subset;
  std::string history_path;  // JSON Lines of EpochRecord; empty: none
  std::string diagnostic_dir;
};

struct FineTuneResult {
  Checkpoint checkpoint;  // best validation AUC, earliest epoch on ties
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_auc = 0.0;
};

// Adam, class-weighted sampling with replacement (ceil(N / batch) batches per
// epoch), cross-entropy, random 4 s crops. Validation scores whole
// recordings in eval mode.
FineTuneResult train_supervised(const Checkpoint& model, const TaskSpec& task,
                                const Manifest& data, const FineTuneStrategy& strategy,
                                std::uint64_t seed, AudioLibrary& audio,
                                const FineTuneOptions& opts = {});

// Row-major N x K class probabilities for `records`, whole recordings, eval mode.
std::vector<double> predict_proba(Encoder<float>& model, nn::Linear<float>& head, HeadTap tap,
                                  const Manifest& data, std::span<const RecordingMeta> records,
                                  AudioLibrary& audio);

// Class probabilities from a fine-tuned checkpoint.
std::vector<double> predict_proba(const Checkpoint& finetuned, const Manifest& data,
                                  std::span<const RecordingMeta> records, AudioLibrary& audio);

struct GridSearchSpec {
  std::vector<double> head_lrs{1e-2, 1e-3, 1e-4};
  std::vector<double> encoder_lrs{1e-4, 1e-5, 1e-6};
  double max_encoder_ratio = 0.1;  // encoder_lr <= head_lr * ratio

  void validate() const;
  // (head_lr, encoder_lr) pairs in grid order; encoder_lr is 0 outside end_to_end.
  std::vector<std::pair<double, double>> cells(StrategyKind kind) const;
};

struct GridCell {
  double head_lr = 0.0;
  double encoder_lr = 0.0;
  double val_auc = 0.0;
};

// argmax val_auc; ties go to the smaller head_lr, then the smaller encoder_lr.
std::size_t select_best_cell(std::span<const GridCell> cells);

struct GridSearchResult {
  FineTuneStrategy best;
  std::vector<GridCell> table;
  FineTuneResult best_run;
};

GridSearchResult grid_search(const Checkpoint& model, const TaskSpec& task, const Manifest& data,
                             const FineTuneStrategy& base, const GridSearchSpec& spec,
                             std::uint64_t seed, AudioLibrary& audio,
                             const FineTuneOptions& opts = {});

}  // namespace cryssl
