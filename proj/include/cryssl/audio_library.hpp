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

#include <map>
#include <string>

#include "cryssl/catalog.hpp"
#include "cryssl/mel.hpp"

namespace cryssl {

// Decodes each recording once and keeps it (and its full-length spectrogram)
// in memory. Keyed by resolved path, so one library can serve several
// manifests. Not thread-safe; give each worker its own instance.
class AudioLibrary {
 public:
  explicit AudioLibrary(FrontendConfig cfg = {}) : cfg_(std::move(cfg)) {}

  const FrontendConfig& frontend() const { return cfg_; }
  const Waveform& waveform(const Manifest& m, const RecordingMeta& r);
  // Whole-recording spectrogram, cyclically tiled in the waveform domain to
  // at least `min_frames` frames.
  const MelSpectrogram& full_mel(const Manifest& m, const RecordingMeta& r, int min_frames);

 private:
  FrontendConfig cfg_;
  std::map<std::string, Waveform> waves_;
  std::map<std::pair<std::string, int>, MelSpectrogram> mels_;
};

}  // namespace cryssl
