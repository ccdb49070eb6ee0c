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

#include "cryssl/audio.hpp"

namespace cryssl {

// Recording-level functionals of frame-level descriptors. Frames are 25 ms
// with a 10 ms hop at 16 kHz, framed like the log-mel front end.
//
// Descriptors (29): mfcc_0..12 (DCT-II of 40 log-mel bands), delta_mfcc_0..12
// (regression over +-2 frames), log_energy, zcr, spectral_centroid_hz.
// Functionals (6 each): mean, std, p10, p50, p90, range.
// Then f0 functionals (same 6, voiced frames only, 0 if none) and
// voiced_fraction. Total 29 * 6 + 6 + 1 = 181.
inline constexpr int kFunctionalDim = 181;

std::vector<std::string> functional_feature_names();

// Deterministic; resamples to 16 kHz if needed. A silent recording yields
// all zeros.
std::vector<double> extract_functionals(const Waveform& w);

struct F0Track {
  std::vector<double> f0_hz;  // 0 where unvoiced
  std::vector<bool> voiced;
};

// Normalised autocorrelation over 50 ms frames, lags for [fmin, fmax] Hz.
// The smallest-lag peak within 90% of the best is taken, refined by
// parabolic interpolation. Voiced: peak >= 0.6 and frame level within 30 dB
// of the loudest frame.
F0Track estimate_f0(const Waveform& w, double fmin_hz = 50.0, double fmax_hz = 600.0);

}  // namespace cryssl
