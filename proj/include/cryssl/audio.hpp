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

#include <string>
#include <vector>

#include "cryssl/util.hpp"

namespace cryssl {

struct Waveform {
  std::vector<float> samples;
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

enum class WavEncoding { kPcm16, kPcm24, kFloat32 };

// Reads RIFF/WAVE (PCM 16/24/32-bit integer, IEEE float32/64, including
// WAVE_FORMAT_EXTENSIBLE) and downmixes to mono. Throws ParseError on
// unreadable or corrupt input.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w,
               WavEncoding enc = WavEncoding::kPcm16);

// Band-limited (Kaiser-windowed sinc) sample-rate conversion. The output has
// ceil(n * target / source) samples; equal rates return the input unchanged.
Waveform resample(const Waveform& w, int target_rate);

// read_wav + resample, clamped to [-1, 1].
Waveform decode_resample(const std::string& path, int target_rate = 16000);

// Exactly round(chunk_s * rate) samples. Longer inputs are cut at a uniform
// offset; shorter ones are tiled cyclically from the start.
Waveform random_chunk(const Waveform& w, double chunk_s, Rng& rng);

}  // namespace cryssl
