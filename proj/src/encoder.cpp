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

#include "cryssl/encoder.hpp"

#include "cryssl/error.hpp"

namespace cryssl {

void EncoderConfig::validate() const {
  if (channels.empty()) throw ConfigError("encoder: channel ladder is empty");
  for (int c : channels)
    if (c <= 0) throw ConfigError("encoder: channel counts must be positive");
  if (convs_per_block < 1) throw ConfigError("encoder: convs_per_block must be >= 1");
  if (pooled_blocks < 0 || pooled_blocks > static_cast<int>(channels.size()))
    throw ConfigError("encoder: pooled_blocks out of range");
  if (input_mels < (1 << pooled_blocks))
    throw ConfigError("encoder: input_mels too small for the pooling stages");
}

EncoderConfig EncoderConfig::narrow(int divisor) {
  if (divisor < 1) throw ConfigError("encoder: width divisor must be >= 1");
  EncoderConfig c;
  for (auto& ch : c.channels) ch = std::max(1, ch / divisor);
  return c;
}

void ProjectionHeadConfig::validate() const {
  if (layers < 2) throw ConfigError("projection head needs at least 2 layers");
  if (hidden_dim <= 0 || bottleneck_dim <= 0)
    throw ConfigError("projection head widths must be positive");
}

ProjectionHeadConfig ProjectionHeadConfig::narrow(int divisor) {
  if (divisor < 1) throw ConfigError("projection: width divisor must be >= 1");
  ProjectionHeadConfig p;
  p.hidden_dim = std::max(1, p.hidden_dim / divisor);
  p.bottleneck_dim = std::max(1, p.bottleneck_dim / divisor);
  return p;
}

std::string_view to_string(HeadTap t) {
  return t == HeadTap::kBackboneEmbedding ? "backbone_embedding" : "projection_layer1";
}

HeadTap parse_head_tap(std::string_view s) {
  if (s == "backbone_embedding") return HeadTap::kBackboneEmbedding;
  if (s == "projection_layer1") return HeadTap::kProjectionLayer1;
  throw ConfigError("unknown head tap '" + std::string(s) + "'");
}

template <typename T>
nn::Tensor<T> stack_mels(std::span<const MelSpectrogram> mels) {
  if (mels.empty()) throw ShapeError("stack_mels: empty batch");
  const int t = mels[0].frames, m = mels[0].n_mels;
  nn::Tensor<T> out({static_cast<int>(mels.size()), t, m});
  std::size_t off = 0;
  for (const auto& mel : mels) {
    if (mel.frames != t || mel.n_mels != m)
      throw ShapeError("stack_mels: spectrograms differ in shape");
    for (float v : mel.data) out.data[off++] = static_cast<T>(v);
  }
  return out;
}

template <typename T>
Encoder<T>::Encoder(EncoderConfig cfg, ProjectionHeadConfig proj)
    : cfg_(std::move(cfg)), proj_cfg_(proj) {
  cfg_.validate();
  proj_cfg_.validate();
  if (cfg_.input_norm) input_bn_.emplace_back("bn0", cfg_.input_mels, 3);
  int in = 1;
  for (std::size_t b = 0; b < cfg_.channels.size(); ++b) {
    Block blk;
    const int out = cfg_.channels[b];
    for (int k = 0; k < cfg_.convs_per_block; ++k) {
      const std::string prefix = "blocks." + std::to_string(b) + ".";
      blk.convs.emplace_back(prefix + "conv" + std::to_string(k) + ".weight", in, out);
      blk.bns.emplace_back(prefix + "bn" + std::to_string(k), out, 1);
      blk.relus.emplace_back();
      in = out;
    }
    blk.pool = static_cast<int>(b) < cfg_.pooled_blocks;
    blocks_.push_back(std::move(blk));
  }
  int width = cfg_.embedding_dim();
  for (int l = 0; l < proj_cfg_.layers; ++l) {
    const int out = l + 1 == proj_cfg_.layers ? proj_cfg_.bottleneck_dim : proj_cfg_.hidden_dim;
    proj_.emplace_back("proj.fc" + std::to_string(l + 1), width, out);
    proj_relu_.emplace_back();
    width = out;
  }
}

template <typename T>
void Encoder<T>::init(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& blk : blocks_)
    for (auto& c : blk.convs) c.init(rng);
  for (auto& l : proj_) l.init(rng);
  for (auto* p : parameters()) {
    if (p->kind == nn::ParamKind::kBnAffine) {
      const bool is_gamma = p->name.ends_with(".weight");
      std::fill(p->value.begin(), p->value.end(), T(is_gamma ? 1 : 0));
    } else if (p->kind == nn::ParamKind::kBnStat) {
      const bool is_var = p->name.ends_with("running_var");
      std::fill(p->value.begin(), p->value.end(), T(is_var ? 1 : 0));
    }
  }
}

template <typename T>
int Encoder<T>::tap_dim(HeadTap tap) const {
  return tap == HeadTap::kBackboneEmbedding ? cfg_.embedding_dim() : proj_cfg_.hidden_dim;
}

template <typename T>
nn::Tensor<T> Encoder<T>::forward_backbone(const nn::Tensor<T>& mels, nn::Mode mode,
                                           bool keep_cache) {
  if (mels.shape.size() != 3 || mels.dim(2) != cfg_.input_mels)
    throw ShapeError("encoder: expected [N, T, " + std::to_string(cfg_.input_mels) + "] input");
  if (mels.dim(1) < cfg_.min_frames())
    throw ShapeError("encoder: input has " + std::to_string(mels.dim(1)) +
                     " frames; at least " + std::to_string(cfg_.min_frames()) + " required");
  nn::Tensor<T> x = mels;
  x.shape = {mels.dim(0), 1, mels.dim(1), mels.dim(2)};
  if (!input_bn_.empty()) x = input_bn_[0].forward(x, mode, keep_cache);
  for (auto& blk : blocks_) {
    for (std::size_t k = 0; k < blk.convs.size(); ++k) {
      x = blk.convs[k].forward(x, keep_cache);
      x = blk.bns[k].forward(x, mode, keep_cache);
      blk.relus[k].forward_inplace(x, keep_cache);
    }
    if (blk.pool) x = blk.pooler.forward(x, keep_cache);
  }
  return global_pool_.forward(x, keep_cache);
}

template <typename T>
void Encoder<T>::backward_backbone(const nn::Tensor<T>& d_embedding) {
  nn::Tensor<T> g = global_pool_.backward(d_embedding);
  const bool input_bn_learns =
      !input_bn_.empty() && (input_bn_[0].gamma().wants_grad() || input_bn_[0].beta().wants_grad());
  for (std::size_t b = blocks_.size(); b-- > 0;) {
    auto& blk = blocks_[b];
    if (blk.pool) g = blk.pooler.backward(g);
    for (std::size_t k = blk.convs.size(); k-- > 0;) {
      blk.relus[k].backward_inplace(g);
      g = blk.bns[k].backward(g, true);
      const bool first = b == 0 && k == 0;
      g = blk.convs[k].backward(g, !first || input_bn_learns);
    }
  }
  if (input_bn_learns) input_bn_[0].backward(g, false);
}

template <typename T>
ProjectionOutput<T> Encoder<T>::forward_projection(const nn::Tensor<T>& embedding,
                                                   bool keep_cache, bool full) {
  ProjectionOutput<T> out;
  nn::Tensor<T> x = proj_[0].forward(embedding, keep_cache);
  proj_relu_[0].forward_inplace(x, keep_cache);
  out.layer1 = x;
  proj_layers_run_ = 1;
  if (!full) return out;
  for (std::size_t l = 1; l < proj_.size(); ++l) {
    x = proj_[l].forward(x, keep_cache);
    if (l + 1 < proj_.size()) proj_relu_[l].forward_inplace(x, keep_cache);
  }
  proj_layers_run_ = static_cast<int>(proj_.size());
  out.final = std::move(x);
  return out;
}

template <typename T>
nn::Tensor<T> Encoder<T>::backward_projection(const nn::Tensor<T>* d_layer1,
                                              const nn::Tensor<T>* d_final) {
  nn::Tensor<T> g;
  if (d_final) {
    if (proj_layers_run_ != static_cast<int>(proj_.size()))
      throw Error("projection: final-output gradient without a full forward pass");
    g = *d_final;
    for (std::size_t l = proj_.size(); l-- > 1;) {
      if (l + 1 < proj_.size()) proj_relu_[l].backward_inplace(g);
      g = proj_[l].backward(g, true);
    }
  }
  if (d_layer1) {
    if (g.data.empty()) {
      g = *d_layer1;
    } else {
      for (std::size_t i = 0; i < g.numel(); ++i) g.data[i] += d_layer1->data[i];
    }
  }
  if (g.data.empty()) throw Error("projection: no gradient supplied");
  proj_relu_[0].backward_inplace(g);
  return proj_[0].backward(g, true);
}

template <typename T>
std::vector<T> Encoder<T>::embed(const MelSpectrogram& mel) {
  std::span<const MelSpectrogram> one(&mel, 1);
  auto e = forward_backbone(stack_mels<T>(one), nn::Mode::kEval, false);
  return e.data;
}

template <typename T>
std::vector<T> Encoder<T>::tap_features(const MelSpectrogram& mel, HeadTap tap) {
  std::span<const MelSpectrogram> one(&mel, 1);
  auto e = forward_backbone(stack_mels<T>(one), nn::Mode::kEval, false);
  if (tap == HeadTap::kBackboneEmbedding) return e.data;
  return forward_projection(e, false, false).layer1.data;
}

template <typename T>
std::vector<nn::Param<T>*> Encoder<T>::backbone_parameters() {
  std::vector<nn::Param<T>*> out;
  auto add_bn = [&](nn::BatchNorm<T>& bn) {
    out.push_back(&bn.gamma());
    out.push_back(&bn.beta());
    out.push_back(&bn.running_mean());
    out.push_back(&bn.running_var());
  };
  for (auto& bn : input_bn_) add_bn(bn);
  for (auto& blk : blocks_) {
    for (std::size_t k = 0; k < blk.convs.size(); ++k) {
      out.push_back(&blk.convs[k].weight());
      add_bn(blk.bns[k]);
    }
  }
  return out;
}

template <typename T>
std::vector<nn::Param<T>*> Encoder<T>::projection_parameters() {
  std::vector<nn::Param<T>*> out;
  for (auto& l : proj_) {
    out.push_back(&l.weight());
    out.push_back(&l.bias());
  }
  return out;
}

template <typename T>
std::vector<nn::Param<T>*> Encoder<T>::parameters() {
  auto out = backbone_parameters();
  auto p = projection_parameters();
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

template <typename T>
std::vector<const nn::Param<T>*> Encoder<T>::parameters() const {
  auto mut = const_cast<Encoder<T>*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

template <typename T>
std::size_t Encoder<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters())
    if (p->kind != nn::ParamKind::kBnStat) n += p->numel();
  return n;
}

template <typename T>
std::size_t Encoder<T>::bn_layer_count() const {
  std::size_t n = input_bn_.size();
  for (const auto& blk : blocks_) n += blk.bns.size();
  return n;
}

template <typename T>
void Encoder<T>::zero_grad() {
  for (auto* p : parameters())
    if (p->wants_grad()) p->zero_grad();
    else p->grad.clear();
}

template <typename T>
void Encoder<T>::clear_caches() {
  for (auto& bn : input_bn_) bn.clear_cache();
  for (auto& blk : blocks_) {
    for (auto& c : blk.convs) c.clear_cache();
    for (auto& bn : blk.bns) bn.clear_cache();
    for (auto& r : blk.relus) r.clear_cache();
  }
  for (auto& l : proj_) l.clear_cache();
  for (auto& r : proj_relu_) r.clear_cache();
}

template nn::Tensor<float> stack_mels<float>(std::span<const MelSpectrogram>);
template nn::Tensor<double> stack_mels<double>(std::span<const MelSpectrogram>);
template class Encoder<float>;
template class Encoder<double>;

}  // namespace cryssl
