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

#include "cryssl/checkpoint.hpp"

#include <spdlog/spdlog.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "cryssl/config.hpp"
#include "cryssl/error.hpp"

namespace cryssl {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'C', 'R', 'Y', 'S', 'S', 'L', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

nn::ParamKind parse_kind(const std::string& s) {
  if (s == "weight") return nn::ParamKind::kWeight;
  if (s == "bn_affine") return nn::ParamKind::kBnAffine;
  if (s == "bn_stat") return nn::ParamKind::kBnStat;
  throw ParseError("checkpoint: unknown tensor kind '" + s + "'");
}

template <typename U>
void append_le(std::vector<std::uint8_t>& out, U v) {
  std::uint8_t b[sizeof(U)];
  std::memcpy(b, &v, sizeof(U));
  out.insert(out.end(), b, b + sizeof(U));  // host is little-endian (x86-64/arm64)
}

template <typename T>
std::vector<nn::Param<T>*> head_params(nn::Linear<T>* head) {
  if (!head) return {};
  return {&head->weight(), &head->bias()};
}

}  // namespace

const NamedTensor* Checkpoint::find(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

bool same_tensors(const Checkpoint& a, const Checkpoint& b) { return a.tensors == b.tensors; }

std::string encoder_config_hash(const EncoderConfig& enc, const ProjectionHeadConfig& proj) {
  return config_hash(json{{"encoder", enc}, {"projection", proj}});
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  if (ckpt.dtype != "f32" && ckpt.dtype != "f64")
    throw ValidationError("checkpoint: dtype must be f32 or f64");
  const std::size_t width = ckpt.dtype == "f32" ? 4 : 8;
  std::vector<std::uint8_t> payload;
  json dir = json::array();
  for (const auto& t : ckpt.tensors) {
    const std::size_t offset = payload.size();
    for (double v : t.values) {
      if (width == 4) append_le(payload, static_cast<float>(v));
      else append_le(payload, v);
    }
    dir.push_back({{"name", t.name},
                   {"kind", std::string(nn::to_string(t.kind))},
                   {"shape", t.shape},
                   {"offset", offset},
                   {"nbytes", payload.size() - offset},
                   {"trainable", t.trainable}});
  }
  json header{{"format", "cryssl-checkpoint"},
              {"stage", ckpt.stage},
              {"dtype", ckpt.dtype},
              {"encoder", ckpt.encoder},
              {"projection", ckpt.projection},
              {"head_tap", std::string(to_string(ckpt.head_tap))},
              {"head_classes", ckpt.head_classes},
              {"config_hashes", ckpt.config_hashes},
              {"seeds", ckpt.seeds},
              {"metadata", ckpt.metadata},
              {"tensors", dir}};
  const std::string h = header.dump();

  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  append_le(out, kVersion);
  append_le(out, static_cast<std::uint64_t>(h.size()));
  out.insert(out.end(), h.begin(), h.end());
  append_le(out, static_cast<std::uint64_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  append_le(out, fnv1a64(payload));
  write_text_file(path, std::string_view(reinterpret_cast<const char*>(out.data()), out.size()));
}

Checkpoint load_checkpoint(const std::string& path, std::optional<std::string> expected_hash) {
  if (!std::filesystem::exists(path)) throw ParseError("checkpoint not found: " + path);
  const std::string raw = read_text_file(path);
  const auto* p = reinterpret_cast<const std::uint8_t*>(raw.data());
  const std::size_t n = raw.size();
  auto need = [&](std::size_t pos, std::size_t len) {
    if (pos + len > n) throw ParseError("checkpoint " + path + ": truncated");
  };
  need(0, 20);
  if (std::memcmp(p, kMagic, 8) != 0) throw ParseError("checkpoint " + path + ": bad magic");
  std::uint32_t version;
  std::memcpy(&version, p + 8, 4);
  if (version != kVersion)
    throw ParseError("checkpoint " + path + ": unsupported version " + std::to_string(version));
  std::uint64_t hlen;
  std::memcpy(&hlen, p + 12, 8);
  need(20, hlen + 8);
  json header;
  try {
    header = json::parse(raw.substr(20, hlen));
  } catch (const json::exception& e) {
    throw ParseError("checkpoint " + path + ": corrupt header: " + e.what());
  }
  std::size_t pos = 20 + hlen;
  std::uint64_t plen;
  std::memcpy(&plen, p + pos, 8);
  pos += 8;
  need(pos, plen + 8);
  const std::uint8_t* payload = p + pos;
  std::uint64_t checksum;
  std::memcpy(&checksum, payload + plen, 8);
  if (pos + plen + 8 != n) throw ParseError("checkpoint " + path + ": trailing bytes");
  if (fnv1a64(std::span<const std::uint8_t>(payload, plen)) != checksum)
    throw ParseError("checkpoint " + path + ": payload checksum mismatch");

  Checkpoint c;
  try {
    c.stage = header.at("stage").get<std::string>();
    c.dtype = header.at("dtype").get<std::string>();
    c.encoder = header.at("encoder").get<EncoderConfig>();
    c.projection = header.at("projection").get<ProjectionHeadConfig>();
    c.head_tap = parse_head_tap(header.at("head_tap").get<std::string>());
    c.head_classes = header.at("head_classes").get<int>();
    c.config_hashes = header.at("config_hashes").get<std::map<std::string, std::string>>();
    c.seeds = header.at("seeds").get<std::map<std::string, std::uint64_t>>();
    c.metadata = header.at("metadata");
    const std::size_t width = c.dtype == "f32" ? 4 : (c.dtype == "f64" ? 8 : 0);
    if (width == 0) throw ParseError("checkpoint " + path + ": bad dtype " + c.dtype);
    for (const auto& e : header.at("tensors")) {
      NamedTensor t;
      t.name = e.at("name").get<std::string>();
      t.kind = parse_kind(e.at("kind").get<std::string>());
      t.shape = e.at("shape").get<std::vector<int>>();
      t.trainable = e.at("trainable").get<bool>();
      const auto off = e.at("offset").get<std::uint64_t>();
      const auto nb = e.at("nbytes").get<std::uint64_t>();
      std::size_t count = 1;
      for (int d : t.shape) count *= static_cast<std::size_t>(d);
      if (nb != count * width || off + nb > plen)
        throw ParseError("checkpoint " + path + ": tensor '" + t.name + "' out of bounds");
      t.values.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        if (width == 4) {
          float f;
          std::memcpy(&f, payload + off + i * 4, 4);
          t.values[i] = f;
        } else {
          std::memcpy(&t.values[i], payload + off + i * 8, 8);
        }
      }
      c.tensors.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw ParseError("checkpoint " + path + ": corrupt header: " + e.what());
  }
  if (expected_hash) {
    auto it = c.config_hashes.find("encoder");
    const std::string stored = it == c.config_hashes.end() ? "<none>" : it->second;
    if (stored != *expected_hash) {
      std::string w = "checkpoint " + path + ": encoder config hash " + stored +
                      " differs from expected " + *expected_hash;
      spdlog::warn("{}", w);
      c.warnings.push_back(std::move(w));
    }
  }
  return c;
}

template <typename T>
Checkpoint make_checkpoint(Encoder<T>& enc, std::string_view stage, nn::Linear<T>* head) {
  Checkpoint c;
  c.stage = std::string(stage);
  c.dtype = std::is_same_v<T, float> ? "f32" : "f64";
  c.encoder = enc.config();
  c.projection = enc.projection_config();
  c.config_hashes["encoder"] = encoder_config_hash(c.encoder, c.projection);
  auto params = enc.parameters();
  for (auto* hp : head_params(head)) params.push_back(hp);
  if (head) c.head_classes = head->out_features();
  for (auto* p : params) {
    NamedTensor t;
    t.name = p->name;
    t.kind = p->kind;
    t.shape = p->shape;
    t.values.assign(p->value.begin(), p->value.end());
    t.trainable = p->trainable;
    c.tensors.push_back(std::move(t));
  }
  return c;
}

template <typename T>
void restore(const Checkpoint& ckpt, Encoder<T>& enc, nn::Linear<T>* head) {
  auto params = enc.parameters();
  if (head && ckpt.has_head())
    for (auto* hp : head_params(head)) params.push_back(hp);
  for (auto* p : params) {
    const NamedTensor* t = ckpt.find(p->name);
    if (!t) throw ShapeError("checkpoint is missing tensor '" + p->name + "'");
    if (t->shape != p->shape) throw ShapeError("checkpoint tensor '" + p->name + "' has wrong shape");
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = static_cast<T>(t->values[i]);
    p->trainable = t->trainable;
  }
}

template <typename T>
Encoder<T> encoder_from(const Checkpoint& ckpt) {
  Encoder<T> enc(ckpt.encoder, ckpt.projection);
  restore(ckpt, enc);
  return enc;
}

template Checkpoint make_checkpoint<float>(Encoder<float>&, std::string_view, nn::Linear<float>*);
template Checkpoint make_checkpoint<double>(Encoder<double>&, std::string_view, nn::Linear<double>*);
template void restore<float>(const Checkpoint&, Encoder<float>&, nn::Linear<float>*);
template void restore<double>(const Checkpoint&, Encoder<double>&, nn::Linear<double>*);
template Encoder<float> encoder_from<float>(const Checkpoint&);
template Encoder<double> encoder_from<double>(const Checkpoint&);

}  // namespace cryssl
