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

#include "cryssl/audio_library.hpp"

#include "cryssl/error.hpp"

namespace cryssl {

const Waveform& AudioLibrary::waveform(const Manifest& m, const RecordingMeta& r) {
  const std::string path = m.resolve(r);
  auto it = waves_.find(path);
  if (it != waves_.end()) return it->second;
  Waveform w = decode_resample(path, cfg_.sample_rate);
  if (w.empty()) throw ParseError(path + ": no audio samples");
  return waves_.emplace(path, std::move(w)).first->second;
}

const MelSpectrogram& AudioLibrary::full_mel(const Manifest& m, const RecordingMeta& r,
                                             int min_frames) {
  const auto key = std::make_pair(m.resolve(r), min_frames);
  auto it = mels_.find(key);
  if (it != mels_.end()) return it->second;
  const Waveform& w = waveform(m, r);
  const std::size_t min_samples = static_cast<std::size_t>(min_frames) * cfg_.hop_samples();
  MelSpectrogram mel;
  if (w.size() < min_samples) {
    Waveform tiled;
    tiled.sample_rate = w.sample_rate;
    tiled.samples.resize(min_samples);
    for (std::size_t i = 0; i < min_samples; ++i) tiled.samples[i] = w.samples[i % w.size()];
    mel = log_mel(tiled, cfg_);
  } else {
    mel = log_mel(w, cfg_);
  }
  return mels_.emplace(key, std::move(mel)).first->second;
}

}  // namespace cryssl
