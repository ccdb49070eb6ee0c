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
#include <vector>

#include "cryssl/audio.hpp"

namespace cryssl {

struct FrontendConfig {
  int sample_rate = 16000;
  int n_mels = 80;
  double window_s = 0.025;
  double hop_s = 0.010;
  int n_fft = 512;
  double fmin = 50.0;
  double fmax = 8000.0;
  double chunk_s = 4.0;
  double log_floor = 1e-10;

  int window_samples() const;
  int hop_samples() const;
  void validate() const;
};

// T x n_mels matrix of natural-log mel energies, time-major.
struct MelSpectrogram {
  int frames = 0;
  int n_mels = 0;
  double frame_rate = 100.0;
  std::vector<float> data;

  float at(int t, int m) const { return data[static_cast<std::size_t>(t) * n_mels + m]; }
  float& at(int t, int m) { return data[static_cast<std::size_t>(t) * n_mels + m]; }
  std::span<const float> frame(int t) const {
    return {data.data() + static_cast<std::size_t>(t) * n_mels, static_cast<std::size_t>(n_mels)};
  }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// n_mels x (n_fft/2 + 1) triangular filters with unit peak, edges equally
// spaced on the mel scale between fmin and fmax.
std::vector<std::vector<double>> mel_filterbank(const FrontendConfig& cfg);

// Centre-padded STFT (Hann window, zero padding outside the signal) with
// T = ceil(n / hop) frames; frame t is centred on sample t*hop + hop/2.
// Power spectrum -> mel filterbank -> ln(energy + log_floor).
MelSpectrogram log_mel(const Waveform& w, const FrontendConfig& cfg = {});

// Frame-wise power spectra with the same framing as log_mel
// (T x (n_fft/2 + 1)). Shared with the baseline feature extractor.
std::vector<std::vector<double>> power_spectrogram(std::span<const float> samples,
                                                   int window, int hop, int n_fft);

// Concatenates spectrograms along time.
MelSpectrogram concat_time(const MelSpectrogram& a, const MelSpectrogram& b);

}  // namespace cryssl
