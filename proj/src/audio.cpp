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

#include "cryssl/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "cryssl/error.hpp"

namespace cryssl {

namespace {

std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open audio file: " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw ParseError(path + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::uint8_t* hdr = buf.data() + pos;
    const std::uint32_t len = le32(hdr + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (len < 16 || body + len > buf.size()) throw ParseError(path + ": truncated fmt chunk");
      format = le16(buf.data() + body);
      channels = le16(buf.data() + body + 2);
      rate = le32(buf.data() + body + 4);
      bits = le16(buf.data() + body + 14);
      if (format == kFormatExtensible && len >= 26) format = le16(buf.data() + body + 24);
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = buf.data() + body;
      // 0 and 0xFFFFFFFF are streaming-writer placeholders: take the rest.
      const bool open_ended = len == 0 || len == 0xFFFFFFFFu;
      if (!open_ended && body + len > buf.size()) throw ParseError(path + ": truncated data chunk");
      data_len = open_ended ? buf.size() - body : len;
      if (open_ended) break;
    }
    pos = body + len + (len & 1u);
  }
  if (channels == 0 || rate == 0) throw ParseError(path + ": missing fmt chunk");
  if (data == nullptr) throw ParseError(path + ": missing data chunk");

  const std::size_t bytes_per = bits / 8;
  const bool ok = (format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32)) ||
                  (format == kFormatFloat && (bits == 32 || bits == 64));
  if (!ok)
    throw ParseError(path + ": unsupported encoding (format " + std::to_string(format) +
                     ", " + std::to_string(bits) + " bits)");
  const std::size_t frame_bytes = bytes_per * channels;
  const std::size_t frames = data_len / frame_bytes;

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + f * frame_bytes + c * bytes_per;
      double v = 0.0;
      if (format == kFormatPcm) {
        if (bits == 16) {
          v = static_cast<std::int16_t>(le16(p)) / 32768.0;
        } else if (bits == 24) {
          std::int32_t s = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
          if (s & 0x800000) s -= 0x1000000;
          v = s / 8388608.0;
        } else {
          v = static_cast<std::int32_t>(le32(p)) / 2147483648.0;
        }
      } else if (bits == 32) {
        float x;
        std::memcpy(&x, p, 4);
        v = x;
      } else {
        double x;
        std::memcpy(&x, p, 8);
        v = x;
      }
      acc += v;
    }
    w.samples[f] = static_cast<float>(acc / channels);
    if (!std::isfinite(w.samples[f])) throw ParseError(path + ": non-finite sample");
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w, WavEncoding enc) {
  const std::uint16_t bits = enc == WavEncoding::kPcm16 ? 16 : (enc == WavEncoding::kPcm24 ? 24 : 32);
  const std::uint16_t format = enc == WavEncoding::kFloat32 ? kFormatFloat : kFormatPcm;
  const std::uint32_t data_len = static_cast<std::uint32_t>(w.samples.size() * (bits / 8));
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, format);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(w.sample_rate));
  put32(out, static_cast<std::uint32_t>(w.sample_rate) * (bits / 8));
  put16(out, bits / 8);
  put16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_len);
  for (float s : w.samples) {
    const double x = std::clamp(static_cast<double>(s), -1.0, 1.0);
    if (enc == WavEncoding::kPcm16) {
      auto v = static_cast<std::int16_t>(std::lround(std::clamp(x * 32768.0, -32768.0, 32767.0)));
      put16(out, static_cast<std::uint16_t>(v));
    } else if (enc == WavEncoding::kPcm24) {
      auto v = static_cast<std::int32_t>(std::lround(std::clamp(x * 8388608.0, -8388608.0, 8388607.0)));
      for (int i = 0; i < 3; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    } else {
      std::uint32_t bitsf;
      float f = s;
      std::memcpy(&bitsf, &f, 4);
      put32(out, bitsf);
    }
  }
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0 || w.sample_rate <= 0) throw ValidationError("sample rates must be positive");
  if (target_rate == w.sample_rate) return w;
  const long long n = static_cast<long long>(w.samples.size());
  const long long from = w.sample_rate, to = target_rate;
  const long long out_len = (n * to + from - 1) / from;

  constexpr double kZeroCrossings = 16.0;
  constexpr double kBeta = 8.6;
  const double cutoff = std::min(1.0, static_cast<double>(to) / static_cast<double>(from)) * 0.97;
  const double half_width = kZeroCrossings / cutoff;  // in input samples
  const double i0_beta = std::cyl_bessel_i(0.0, kBeta);

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(out_len));
  for (long long j = 0; j < out_len; ++j) {
    const double t = static_cast<double>(j) * static_cast<double>(from) / static_cast<double>(to);
    const long long lo = std::max(0LL, static_cast<long long>(std::ceil(t - half_width)));
    const long long hi = std::min(n - 1, static_cast<long long>(std::floor(t + half_width)));
    double acc = 0.0;
    for (long long k = lo; k <= hi; ++k) {
      const double x = t - static_cast<double>(k);
      const double u = x / half_width;
      const double win = std::cyl_bessel_i(0.0, kBeta * std::sqrt(std::max(0.0, 1.0 - u * u))) / i0_beta;
      const double arg = std::numbers::pi * cutoff * x;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      acc += w.samples[static_cast<std::size_t>(k)] * cutoff * sinc * win;
    }
    out.samples[static_cast<std::size_t>(j)] = static_cast<float>(acc);
  }
  return out;
}

Waveform decode_resample(const std::string& path, int target_rate) {
  Waveform w = resample(read_wav(path), target_rate);
  for (auto& s : w.samples) s = std::clamp(s, -1.0f, 1.0f);
  return w;
}

Waveform random_chunk(const Waveform& w, double chunk_s, Rng& rng) {
  if (!(chunk_s > 0.0)) throw ValidationError("chunk length must be positive");
  if (w.empty()) throw ValidationError("cannot cut a chunk from an empty waveform");
  const auto len = static_cast<std::size_t>(std::llround(chunk_s * w.sample_rate));
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(len);
  const std::size_t n = w.samples.size();
  if (n >= len) {
    std::uniform_int_distribution<std::size_t> start(0, n - len);
    const std::size_t s = start(rng);
    std::copy_n(w.samples.begin() + static_cast<std::ptrdiff_t>(s), len, out.samples.begin());
  } else {
    for (std::size_t i = 0; i < len; ++i) out.samples[i] = w.samples[i % n];
  }
  return out;
}

}  // namespace cryssl
