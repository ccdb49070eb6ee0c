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

#include <filesystem>
#include <fstream>

#include "cryssl/checkpoint.hpp"
#include "cryssl/error.hpp"

using namespace cryssl;

namespace {

const std::string kDir = "checkpoint_tmp";

Encoder<float> small_encoder(std::uint64_t seed) {
  Encoder<float> enc(EncoderConfig::narrow(16), ProjectionHeadConfig::narrow(16));
  enc.init(seed);
  return enc;
}

void flip_byte(const std::string& path, std::uintmax_t pos) {
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(static_cast<std::streamoff>(pos));
  char c;
  f.read(&c, 1);
  c = static_cast<char>(c ^ 0x5a);
  f.seekp(static_cast<std::streamoff>(pos));
  f.write(&c, 1);
}

}  // namespace

TEST_CASE("round-trip preserves every field") {
  std::filesystem::create_directories(kDir);
  auto enc = small_encoder(1);
  nn::Linear<float> head("head", 128, 3);
  Rng rng(2);
  head.init(rng);
  enc.parameters()[3]->trainable = false;
  Checkpoint c = make_checkpoint(enc, kStagePretrained, &head);
  c.head_tap = HeadTap::kBackboneEmbedding;
  c.seeds["pretrain"] = 0xfedcba9876543210ULL;
  c.config_hashes["ssl"] = "abc";
  c.metadata["steps"] = 12;
  save_checkpoint(c, kDir + "/a.ckpt");
  Checkpoint back = load_checkpoint(kDir + "/a.ckpt");
  CHECK(back.stage == "pretrained");
  CHECK(back.head_classes == 3);
  CHECK(back.head_tap == HeadTap::kBackboneEmbedding);
  CHECK(back.seeds == c.seeds);
  CHECK(back.config_hashes == c.config_hashes);
  CHECK(back.metadata == c.metadata);
  CHECK(back.encoder.channels == c.encoder.channels);
  CHECK(same_tensors(back, c));
  CHECK(back.warnings.empty());

  auto restored = small_encoder(99);
  nn::Linear<float> head2("head", 128, 3);
  restore(back, restored, &head2);
  auto pa = enc.parameters();
  auto pb = restored.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->value == pb[i]->value);
    CHECK(pa[i]->trainable == pb[i]->trainable);
  }
  CHECK(head2.weight().value == head.weight().value);
}

TEST_CASE("double precision payloads") {
  std::filesystem::create_directories(kDir);
  Encoder<double> enc(EncoderConfig::narrow(16), ProjectionHeadConfig::narrow(16));
  enc.init(3);
  enc.parameters()[1]->value[0] = 0.1;  // not representable in float
  Checkpoint c = make_checkpoint(enc, kStageInitialized);
  CHECK(c.dtype == "f64");
  save_checkpoint(c, kDir + "/d.ckpt");
  auto back = load_checkpoint(kDir + "/d.ckpt");
  CHECK(back.tensors[1].values[0] == 0.1);
  auto copy = encoder_from<double>(back);
  CHECK(copy.parameters()[1]->value[0] == 0.1);
}

TEST_CASE("corruption is detected") {
  std::filesystem::create_directories(kDir);
  auto enc = small_encoder(4);
  const std::string path = kDir + "/c.ckpt";
  save_checkpoint(make_checkpoint(enc, kStagePretrained), path);
  const auto size = std::filesystem::file_size(path);

  CHECK_THROWS_AS(load_checkpoint(kDir + "/none.ckpt"), ParseError);

  flip_byte(path, size - 100);
  CHECK_THROWS_AS(load_checkpoint(path), ParseError);
  flip_byte(path, size - 100);
  CHECK_NOTHROW(load_checkpoint(path));

  flip_byte(path, 0);
  CHECK_THROWS_AS(load_checkpoint(path), ParseError);
  flip_byte(path, 0);

  std::filesystem::resize_file(path, size / 2);
  CHECK_THROWS_AS(load_checkpoint(path), ParseError);
}

TEST_CASE("encoder hash mismatch warns but loads") {
  std::filesystem::create_directories(kDir);
  auto enc = small_encoder(5);
  save_checkpoint(make_checkpoint(enc, kStagePretrained), kDir + "/h.ckpt");
  const auto own = encoder_config_hash(enc.config(), enc.projection_config());
  CHECK(load_checkpoint(kDir + "/h.ckpt", own).warnings.empty());
  auto other = encoder_config_hash(EncoderConfig::narrow(8), ProjectionHeadConfig::narrow(8));
  CHECK(other != own);
  auto loaded = load_checkpoint(kDir + "/h.ckpt", other);
  CHECK(loaded.warnings.size() == 1);
  CHECK(same_tensors(loaded, make_checkpoint(enc, kStagePretrained)));
}

TEST_CASE("restore rejects mismatched topology") {
  auto enc = small_encoder(6);
  Checkpoint c = make_checkpoint(enc, kStagePretrained);
  Encoder<float> wide(EncoderConfig::narrow(8), ProjectionHeadConfig::narrow(8));
  CHECK_THROWS_AS(restore(c, wide), ShapeError);
  c.tensors.pop_back();
  CHECK_THROWS_AS(restore(c, enc), ShapeError);
  std::filesystem::remove_all(kDir);
}
