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
#include <random>
#include <set>

#include "cryssl/encoder.hpp"
#include "cryssl/error.hpp"

using namespace cryssl;

namespace {

// Learnable values of the backbone plus projection head, counted from the
// layer shapes.
std::size_t expected_count(const EncoderConfig& e, const ProjectionHeadConfig& p) {
  std::size_t n = e.input_norm ? 2u * e.input_mels : 0u;
  int in = 1;
  for (int c : e.channels)
    for (int k = 0; k < e.convs_per_block; ++k) {
      n += 9u * in * c + 2u * c;
      in = c;
    }
  int width = e.embedding_dim();
  for (int l = 0; l < p.layers; ++l) {
    const int out = l + 1 == p.layers ? p.bottleneck_dim : p.hidden_dim;
    n += static_cast<std::size_t>(width) * out + out;
    width = out;
  }
  return n;
}

MelSpectrogram random_mel(int frames, int mels, std::uint64_t seed) {
  MelSpectrogram m;
  m.frames = frames;
  m.n_mels = mels;
  m.data.resize(static_cast<std::size_t>(frames) * mels);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(-4.0f, 2.0f);
  for (auto& v : m.data) v = g(rng);
  return m;
}

}  // namespace

TEST_CASE("full-size parameter count") {
  Encoder<float> enc(EncoderConfig::cnn14(), ProjectionHeadConfig{});
  CHECK(enc.parameter_count() == expected_count(EncoderConfig::cnn14(), ProjectionHeadConfig{}));
  CHECK(enc.parameter_count() == 84919264u);
  CHECK(enc.parameter_count() >= 72000000u);
  CHECK(enc.parameter_count() <= 88000000u);
  CHECK(enc.bn_layer_count() == 13);
  CHECK(enc.tap_dim(HeadTap::kBackboneEmbedding) == 2048);
  CHECK(enc.tap_dim(HeadTap::kProjectionLayer1) == 2048);
}

TEST_CASE("narrow configs") {
  auto e = EncoderConfig::narrow(8);
  CHECK(e.channels == std::vector<int>{8, 16, 32, 64, 128, 256});
  auto p = ProjectionHeadConfig::narrow(8);
  Encoder<float> enc(e, p);
  CHECK(enc.parameter_count() == expected_count(e, p));
  CHECK(enc.tap_dim(HeadTap::kProjectionLayer1) == 256);
  CHECK_THROWS_AS(EncoderConfig::narrow(0), ConfigError);
}

TEST_CASE("invalid topologies are rejected") {
  EncoderConfig e = EncoderConfig::narrow(8);
  e.input_mels = 16;
  CHECK_THROWS_AS(Encoder<float>(e, ProjectionHeadConfig::narrow(8)), ConfigError);
  e = EncoderConfig::narrow(8);
  e.channels.clear();
  CHECK_THROWS_AS(Encoder<float>(e, ProjectionHeadConfig::narrow(8)), ConfigError);
  ProjectionHeadConfig p;
  p.layers = 1;
  CHECK_THROWS_AS(Encoder<float>(EncoderConfig::narrow(8), p), ConfigError);
}

TEST_CASE("arbitrary-length inputs") {
  Encoder<float> enc(EncoderConfig::narrow(8), ProjectionHeadConfig::narrow(8));
  enc.init(3);
  for (int t : {32, 400, 1000}) {
    auto e = enc.embed(random_mel(t, 80, static_cast<std::uint64_t>(t)));
    CHECK(e.size() == 256);
    for (float v : e) CHECK(std::isfinite(v));
    CHECK(enc.tap_features(random_mel(t, 80, 1), HeadTap::kProjectionLayer1).size() == 256);
  }
  CHECK_THROWS_AS(enc.embed(random_mel(31, 80, 0)), ShapeError);
  CHECK_THROWS_AS(enc.embed(random_mel(64, 64, 0)), ShapeError);
}

TEST_CASE("batch and single-recording paths agree in eval mode") {
  Encoder<float> enc(EncoderConfig::narrow(8), ProjectionHeadConfig::narrow(8));
  enc.init(4);
  std::vector<MelSpectrogram> mels{random_mel(64, 80, 1), random_mel(64, 80, 2)};
  auto batch = enc.forward_backbone(stack_mels<float>(mels), nn::Mode::kEval, false);
  REQUIRE(batch.shape == std::vector<int>{2, 256});
  auto single = enc.embed(mels[1]);
  for (int j = 0; j < 256; ++j) CHECK(batch.data[256 + j] == doctest::Approx(single[j]).epsilon(1e-5));
}

TEST_CASE("init is a pure function of the seed") {
  Encoder<float> a(EncoderConfig::narrow(16), ProjectionHeadConfig::narrow(16));
  Encoder<float> b(EncoderConfig::narrow(16), ProjectionHeadConfig::narrow(16));
  a.init(9);
  b.init(9);
  auto pa = a.parameters();
  auto pb = b.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->name == pb[i]->name);
    CHECK(pa[i]->value == pb[i]->value);
  }
}

TEST_CASE("first-layer gradient matches central differences") {
  EncoderConfig e;
  e.channels = {4, 4, 6, 6, 8, 8};
  e.input_mels = 32;
  ProjectionHeadConfig p{3, 12, 5};
  Encoder<double> enc(e, p);
  enc.init(5);
  // Non-trivial BN affine values.
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (auto* prm : enc.parameters())
    if (prm->kind == nn::ParamKind::kBnAffine)
      for (auto& v : prm->value) v = prm->name.ends_with(".weight") ? u(rng) : u(rng) - 1.0;

  nn::Tensor<double> x({2, 32, 32});
  std::normal_distribution<double> g;
  for (auto& v : x.data) v = g(rng);
  nn::Tensor<double> w({2, 5});
  for (auto& v : w.data) v = g(rng);

  auto loss = [&] {
    auto emb = enc.forward_backbone(x, nn::Mode::kTrain, false);
    auto out = enc.forward_projection(emb, false, true);
    double s = 0.0;
    for (std::size_t i = 0; i < w.numel(); ++i) s += out.final.data[i] * w.data[i];
    return s;
  };

  enc.zero_grad();
  auto emb = enc.forward_backbone(x, nn::Mode::kTrain, true);
  enc.forward_projection(emb, true, true);
  auto d_emb = enc.backward_projection(nullptr, &w);
  enc.backward_backbone(d_emb);

  nn::Param<double>* first = nullptr;
  for (auto* prm : enc.parameters())
    if (prm->name == "blocks.0.conv0.weight") first = prm;
  REQUIRE(first != nullptr);
  REQUIRE(first->grad.size() == first->value.size());

  const double h = 1e-5;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < first->value.size(); ++i) {
    const double keep = first->value[i];
    first->value[i] = keep + h;
    const double up = loss();
    first->value[i] = keep - h;
    const double down = loss();
    first->value[i] = keep;
    const double fd = (up - down) / (2 * h);
    num += (fd - first->grad[i]) * (fd - first->grad[i]);
    den += fd * fd;
  }
  CHECK(den > 0.0);
  CHECK(std::sqrt(num / den) < 1e-3);
}

TEST_CASE("eval-mode forward is deterministic") {
  Encoder<float> enc(EncoderConfig::narrow(16), ProjectionHeadConfig::narrow(16));
  enc.init(8);
  const auto mel = random_mel(100, 80, 12);
  CHECK(enc.embed(mel) == enc.embed(mel));
}

TEST_CASE("every tensor has exactly one kind") {
  Encoder<float> enc(EncoderConfig::narrow(8), ProjectionHeadConfig::narrow(8));
  std::size_t weights = 0, affine = 0, stats = 0;
  std::set<std::string> names;
  for (const auto* p : enc.parameters()) {
    names.insert(p->name);
    switch (p->kind) {
      case nn::ParamKind::kWeight: ++weights; break;
      case nn::ParamKind::kBnAffine: ++affine; break;
      case nn::ParamKind::kBnStat: ++stats; break;
    }
  }
  CHECK(names.size() == enc.parameters().size());
  CHECK(weights + affine + stats == enc.parameters().size());
  CHECK(affine == 2 * enc.bn_layer_count());
  CHECK(stats == 2 * enc.bn_layer_count());
}
