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

#include "cryssl/augment.hpp"

#include <cmath>

#include "cryssl/error.hpp"

namespace cryssl {

AugmentationChain AugmentationChain::none() {
  AugmentationChain c;
  c.random_chunk = false;
  c.gain_jitter = false;
  c.background_mix = false;
  c.spec_mask = false;
  return c;
}

namespace {

double energy(std::span<const float> s) {
  double e = 0.0;
  for (float v : s) e += static_cast<double>(v) * v;
  return e;
}

Waveform head_chunk(const Waveform& w, double chunk_s) {
  const auto len = static_cast<std::size_t>(std::llround(chunk_s * w.sample_rate));
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(len);
  for (std::size_t i = 0; i < len; ++i) out.samples[i] = w.samples[i % w.size()];
  return out;
}

}  // namespace

Waveform mix_at_snr(const Waveform& x, const Waveform& b, double snr_db) {
  if (b.empty()) return x;
  const double ex = energy(x.samples);
  std::vector<float> bb(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) bb[i] = b.samples[i % b.size()];
  const double eb = energy(bb);
  if (ex <= 0.0 || eb <= 0.0) return x;
  const double g = std::sqrt(ex / (eb * std::pow(10.0, snr_db / 10.0)));
  Waveform out = x;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.samples[i] = static_cast<float>(out.samples[i] + g * bb[i]);
  return out;
}

void apply_spec_mask(MelSpectrogram& mel, const AugmentationChain& chain, Rng& rng) {
  double s = 0.0;
  for (float v : mel.data) s += v;
  const auto fill = static_cast<float>(s / static_cast<double>(mel.data.size()));
  for (int k = 0; k < chain.time_masks; ++k) {
    const int w = std::uniform_int_distribution<int>(0, std::min(chain.max_time_width, mel.frames))(rng);
    const int start = std::uniform_int_distribution<int>(0, mel.frames - w)(rng);
    for (int t = start; t < start + w; ++t)
      for (int m = 0; m < mel.n_mels; ++m) mel.at(t, m) = fill;
  }
  for (int k = 0; k < chain.mel_masks; ++k) {
    const int w = std::uniform_int_distribution<int>(0, std::min(chain.max_mel_width, mel.n_mels))(rng);
    const int start = std::uniform_int_distribution<int>(0, mel.n_mels - w)(rng);
    for (int t = 0; t < mel.frames; ++t)
      for (int m = start; m < start + w; ++m) mel.at(t, m) = fill;
  }
}

MelSpectrogram make_view(const Waveform& recording, std::span<const Waveform* const> mix_pool,
                         const AugmentationChain& chain, const FrontendConfig& frontend,
                         Rng& rng) {
  if (recording.empty()) throw ValidationError("make_views: empty recording");
  Waveform w = chain.random_chunk ? random_chunk(recording, frontend.chunk_s, rng)
                                  : head_chunk(recording, frontend.chunk_s);
  if (chain.gain_jitter) {
    const double db = std::uniform_real_distribution<double>(-chain.gain_db, chain.gain_db)(rng);
    const double g = std::pow(10.0, db / 20.0);
    for (auto& s : w.samples) s = static_cast<float>(s * g);
  }
  if (chain.background_mix && !mix_pool.empty()) {
    const auto pick = std::uniform_int_distribution<std::size_t>(0, mix_pool.size() - 1)(rng);
    const double snr = std::uniform_real_distribution<double>(chain.snr_min_db, chain.snr_max_db)(rng);
    const Waveform bg = random_chunk(*mix_pool[pick], frontend.chunk_s, rng);
    w = mix_at_snr(w, bg, snr);
  }
  MelSpectrogram mel = log_mel(w, frontend);
  if (chain.spec_mask) apply_spec_mask(mel, chain, rng);
  return mel;
}

std::pair<MelSpectrogram, MelSpectrogram> make_views(const Waveform& recording,
                                                     std::span<const Waveform* const> mix_pool,
                                                     const AugmentationChain& chain,
                                                     const FrontendConfig& frontend, Rng& rng) {
  MelSpectrogram a = make_view(recording, mix_pool, chain, frontend, rng);
  MelSpectrogram b = make_view(recording, mix_pool, chain, frontend, rng);
  return {std::move(a), std::move(b)};
}

}  // namespace cryssl
