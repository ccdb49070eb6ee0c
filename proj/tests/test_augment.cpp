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

#include <cmath>
#include <numbers>
#include <random>

#include "cryssl/augment.hpp"

using namespace cryssl;

namespace {

Waveform noise(std::size_t n, std::uint64_t seed, double scale = 0.1) {
  Waveform w;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  for (std::size_t i = 0; i < n; ++i) w.samples.push_back(static_cast<float>(g(rng)));
  return w;
}

double energy(const std::vector<float>& x) {
  double e = 0.0;
  for (float v : x) e += static_cast<double>(v) * v;
  return e;
}

}  // namespace

TEST_CASE("background mix hits the requested SNR") {
  Waveform x = noise(16000, 1, 0.3);
  Waveform b = noise(7000, 2, 0.05);
  for (double snr : {5.0, 12.5, 20.0}) {
    Waveform y = mix_at_snr(x, b, snr);
    REQUIRE(y.size() == x.size());
    std::vector<float> added(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) added[i] = y.samples[i] - x.samples[i];
    CHECK(10.0 * std::log10(energy(x.samples) / energy(added)) == doctest::Approx(snr).epsilon(1e-4));
  }
  Waveform silent;
  silent.samples.assign(100, 0.0f);
  CHECK(mix_at_snr(x, silent, 10.0).samples == x.samples);
  CHECK(mix_at_snr(silent, x, 10.0).samples == silent.samples);
}

TEST_CASE("spec masks fill with the spectrogram mean and respect widths") {
  MelSpectrogram mel;
  mel.frames = 100;
  mel.n_mels = 80;
  for (int i = 0; i < 8000; ++i) mel.data.push_back(static_cast<float>(i % 7));
  double mean = 0.0;
  for (float v : mel.data) mean += v;
  mean /= 8000.0;
  AugmentationChain chain;
  chain.time_masks = 1;
  chain.mel_masks = 0;
  chain.max_time_width = 10;
  for (std::uint64_t s = 0; s < 20; ++s) {
    MelSpectrogram m = mel;
    Rng rng(s);
    apply_spec_mask(m, chain, rng);
    int masked_frames = 0;
    for (int t = 0; t < m.frames; ++t) {
      bool all = true;
      for (int k = 0; k < m.n_mels; ++k) all = all && m.at(t, k) == static_cast<float>(mean);
      masked_frames += all;
    }
    CHECK(masked_frames <= 10);
  }
}

TEST_CASE("views have the chunk shape and differ") {
  Waveform rec = noise(16000 * 5, 3);
  Waveform other = noise(16000 * 6, 4);
  const Waveform* pool[] = {&other};
  FrontendConfig fe;
  Rng rng(5);
  auto [a, b] = make_views(rec, pool, AugmentationChain{}, fe, rng);
  CHECK(a.frames == 400);
  CHECK(b.frames == 400);
  CHECK(a.n_mels == 80);
  CHECK(a.data != b.data);
}

TEST_CASE("an empty chain is deterministic and takes the head chunk") {
  Waveform rec = noise(16000 * 5, 6);
  FrontendConfig fe;
  Rng r1(1), r2(2);
  auto a = make_view(rec, {}, AugmentationChain::none(), fe, r1);
  auto b = make_view(rec, {}, AugmentationChain::none(), fe, r2);
  CHECK(a.data == b.data);
  Waveform head = rec;
  head.samples.resize(64000);
  CHECK(a.data == log_mel(head, fe).data);
}

TEST_CASE("views are reproducible for a fixed seed") {
  Waveform rec = noise(16000 * 5, 7);
  FrontendConfig fe;
  Rng r1(9), r2(9);
  CHECK(make_view(rec, {}, AugmentationChain{}, fe, r1).data ==
        make_view(rec, {}, AugmentationChain{}, fe, r2).data);
}
