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

#include <span>
#include <utility>

#include "cryssl/audio.hpp"
#include "cryssl/mel.hpp"

namespace cryssl {

// Applied in order: crop -> gain -> background mix -> log-mel -> masking.
// A disabled crop takes the first chunk_s seconds (tiled if shorter).
struct AugmentationChain {
  bool random_chunk = true;
  bool gain_jitter = true;
  double gain_db = 6.0;  // uniform in [-gain_db, +gain_db]
  bool background_mix = true;
  double snr_min_db = 5.0;
  double snr_max_db = 20.0;
  bool spec_mask = true;
  int time_masks = 2;
  int max_time_width = 40;
  int mel_masks = 2;
  int max_mel_width = 12;

  static AugmentationChain none();
};

// x + g*b with g chosen so that 10 log10(|x|^2 / |g b|^2) = snr_db. `b` is
// tiled/cut to the length of x. Returns x unchanged if either is silent.
Waveform mix_at_snr(const Waveform& x, const Waveform& b, double snr_db);

// Masked cells are set to the spectrogram's mean value.
void apply_spec_mask(MelSpectrogram& mel, const AugmentationChain& chain, Rng& rng);

// Two independently augmented views of one recording. `mix_pool` holds the
// candidate background clips (normally the other clips of the batch).
std::pair<MelSpectrogram, MelSpectrogram> make_views(const Waveform& recording,
                                                     std::span<const Waveform* const> mix_pool,
                                                     const AugmentationChain& chain,
                                                     const FrontendConfig& frontend, Rng& rng);

// One augmented view; make_views calls this twice.
MelSpectrogram make_view(const Waveform& recording, std::span<const Waveform* const> mix_pool,
                         const AugmentationChain& chain, const FrontendConfig& frontend, Rng& rng);

}  // namespace cryssl
