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
#include <span>
#include <string>
#include <vector>

#include "cryssl/layers.hpp"
#include "cryssl/mel.hpp"

namespace cryssl {

// CNN14-style backbone: an optional per-mel-band input batch norm, then
// blocks of [3x3 conv -> BN -> ReLU] x convs_per_block, 2x2 average pooling
// after each of the first `pooled_blocks` blocks, and a global mean over all
// remaining time-frequency positions.
struct EncoderConfig {
  std::vector<int> channels{64, 128, 256, 512, 1024, 2048};
  int convs_per_block = 2;
  int pooled_blocks = 5;
  int input_mels = 80;
  bool input_norm = true;

  int embedding_dim() const { return channels.back(); }
  // Shortest input that survives every pooling stage.
  int min_frames() const { return 1 << pooled_blocks; }
  void validate() const;

  static EncoderConfig cnn14() { return {}; }
  // Same topology with every channel count divided by `divisor`.
  static EncoderConfig narrow(int divisor);
};

// Linear layers [E->H, (H->H) x (layers-2), H->B] with ReLU between layers
// and none after the bottleneck.
struct ProjectionHeadConfig {
  int layers = 3;
  int hidden_dim = 2048;
  int bottleneck_dim = 512;

  void validate() const;
  static ProjectionHeadConfig narrow(int divisor);
};

// Which activation the downstream classifier reads.
enum class HeadTap { kBackboneEmbedding, kProjectionLayer1 };
std::string_view to_string(HeadTap t);
HeadTap parse_head_tap(std::string_view s);

template <typename T>
struct ProjectionOutput {
  nn::Tensor<T> layer1;  // post-ReLU activation of the first layer
  nn::Tensor<T> final;   // bottleneck output (empty when not computed)
};

// Stacks equally long spectrograms into a [N, T, M] tensor.
template <typename T>
nn::Tensor<T> stack_mels(std::span<const MelSpectrogram> mels);

template <typename T>
class Encoder {
 public:
  Encoder(EncoderConfig cfg, ProjectionHeadConfig proj);

  // Fan-in scaled uniform weights, zero biases, BN affine (1, 0), running
  // statistics (0, 1).
  void init(std::uint64_t seed);

  const EncoderConfig& config() const { return cfg_; }
  const ProjectionHeadConfig& projection_config() const { return proj_cfg_; }
  int tap_dim(HeadTap tap) const;

  // mels: [N, T, input_mels] with T >= min_frames(). Returns [N, E].
  nn::Tensor<T> forward_backbone(const nn::Tensor<T>& mels, nn::Mode mode, bool keep_cache);
  void backward_backbone(const nn::Tensor<T>& d_embedding);

  // `full` = false stops after layer 1 (the transfer tap).
  ProjectionOutput<T> forward_projection(const nn::Tensor<T>& embedding, bool keep_cache,
                                         bool full = true);
  // Either gradient may be null. Returns the gradient w.r.t. the embedding.
  nn::Tensor<T> backward_projection(const nn::Tensor<T>* d_layer1, const nn::Tensor<T>* d_final);

  // Eval-mode single-recording paths for arbitrary T >= min_frames().
  std::vector<T> embed(const MelSpectrogram& mel);
  std::vector<T> tap_features(const MelSpectrogram& mel, HeadTap tap);

  // Every named tensor (weights, BN affine, BN running statistics) in a
  // fixed order; names are stable across runs and used by checkpoints.
  std::vector<nn::Param<T>*> parameters();
  std::vector<const nn::Param<T>*> parameters() const;
  std::vector<nn::Param<T>*> backbone_parameters();
  std::vector<nn::Param<T>*> projection_parameters();
  // Learnable values only (running statistics excluded).
  std::size_t parameter_count() const;
  std::size_t bn_layer_count() const;

  void zero_grad();
  void clear_caches();

 private:
  struct Block {
    std::vector<nn::Conv3x3<T>> convs;
    std::vector<nn::BatchNorm<T>> bns;
    std::vector<nn::Relu<T>> relus;
    bool pool = false;
    nn::AvgPool2x2<T> pooler;
  };

  EncoderConfig cfg_;
  ProjectionHeadConfig proj_cfg_;
  std::vector<nn::BatchNorm<T>> input_bn_;  // zero or one
  std::vector<Block> blocks_;
  nn::GlobalMeanPool<T> global_pool_;
  std::vector<nn::Linear<T>> proj_;
  std::vector<nn::Relu<T>> proj_relu_;
  int proj_layers_run_ = 0;
};

extern template class Encoder<float>;
extern template class Encoder<double>;

}  // namespace cryssl
