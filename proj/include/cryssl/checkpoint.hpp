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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cryssl/encoder.hpp"

namespace cryssl {

// Stage tags: "initialized" (fresh random weights), "pretrained",
// "cry_adapted", "finetuned".
inline constexpr std::string_view kStageInitialized = "initialized";
inline constexpr std::string_view kStagePretrained = "pretrained";
inline constexpr std::string_view kStageCryAdapted = "cry_adapted";
inline constexpr std::string_view kStageFinetuned = "finetuned";

struct NamedTensor {
  std::string name;
  nn::ParamKind kind = nn::ParamKind::kWeight;
  std::vector<int> shape;
  // Stored widened to double; float payloads round-trip exactly.
  std::vector<double> values;
  bool trainable = true;

  bool operator==(const NamedTensor&) const = default;
};

// Snapshot of an encoder (plus optional classifier head) moved between
// stages. On-disk layout is documented in docs/checkpoint_format.md.
struct Checkpoint {
  std::string stage{kStageInitialized};
  std::string dtype = "f32";  // "f32" or "f64"
  EncoderConfig encoder;
  ProjectionHeadConfig projection;
  HeadTap head_tap = HeadTap::kProjectionLayer1;
  int head_classes = 0;  // 0: no classifier head stored
  std::map<std::string, std::string> config_hashes;
  std::map<std::string, std::uint64_t> seeds;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  // Populated by load_checkpoint, never serialised.
  std::vector<std::string> warnings;

  const NamedTensor* find(std::string_view name) const;
  bool has_head() const { return head_classes > 0; }
};

bool same_tensors(const Checkpoint& a, const Checkpoint& b);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

// Throws ParseError on a missing, truncated or corrupt file. When
// `expected_encoder_hash` is given and differs from the stored hash, the
// load still succeeds and a warning is logged and recorded in `warnings`.
Checkpoint load_checkpoint(const std::string& path,
                           std::optional<std::string> expected_encoder_hash = std::nullopt);

std::string encoder_config_hash(const EncoderConfig& enc, const ProjectionHeadConfig& proj);

template <typename T>
Checkpoint make_checkpoint(Encoder<T>& enc, std::string_view stage,
                           nn::Linear<T>* head = nullptr);

// Copies checkpoint tensors into an encoder of matching topology (and into
// `head` when given and stored). Throws ShapeError on any mismatch.
template <typename T>
void restore(const Checkpoint& ckpt, Encoder<T>& enc, nn::Linear<T>* head = nullptr);

template <typename T>
Encoder<T> encoder_from(const Checkpoint& ckpt);

}  // namespace cryssl
