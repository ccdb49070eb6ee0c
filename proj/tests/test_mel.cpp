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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cryssl/error.hpp"
#include "cryssl/mel.hpp"

using namespace cryssl;

namespace {

Waveform tone(double hz, std::size_t n, double amp = 0.5) {
  Waveform w;
  for (std::size_t i = 0; i < n; ++i)
    w.samples.push_back(static_cast<float>(amp * std::sin(2 * std::numbers::pi * hz * i / 16000.0)));
  return w;
}

}  // namespace

TEST_CASE("HTK mel scale") {
  CHECK(hz_to_mel(0.0) == 0.0);
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  CHECK(hz_to_mel(1000.0) == doctest::Approx(999.98554).epsilon(1e-7));
  for (double hz : {50.0, 440.0, 8000.0}) CHECK(mel_to_hz(hz_to_mel(hz)) == doctest::Approx(hz));
}

TEST_CASE("frontend geometry") {
  FrontendConfig cfg;
  CHECK(cfg.window_samples() == 400);
  CHECK(cfg.hop_samples() == 160);
  cfg.validate();
  FrontendConfig bad;
  bad.n_fft = 256;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.fmax = 9000.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("filterbank shape") {
  FrontendConfig cfg;
  auto fb = mel_filterbank(cfg);
  REQUIRE(fb.size() == 80);
  const double bin_hz = 16000.0 / 512;
  const double lo = hz_to_mel(50.0), hi = hz_to_mel(8000.0);
  for (std::size_t m = 0; m < fb.size(); ++m) {
    REQUIRE(fb[m].size() == 257);
    double peak = 0.0;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < fb[m].size(); ++k) {
      CHECK(fb[m][k] >= 0.0);
      CHECK(fb[m][k] <= 1.0 + 1e-12);
      if (fb[m][k] > peak) peak = fb[m][k], arg = k;
    }
    CHECK(peak > 0.0);
    const double centre = mel_to_hz(lo + (hi - lo) * static_cast<double>(m + 1) / 81.0);
    CHECK(std::abs(arg * bin_hz - centre) <= bin_hz);
  }
}

TEST_CASE("frame count is ceil(n / hop)") {
  for (std::size_t n : {160u, 161u, 1000u, 64000u}) {
    auto mel = log_mel(tone(440, n));
    CHECK(mel.frames == static_cast<int>((n + 159) / 160));
    CHECK(mel.n_mels == 80);
    CHECK(mel.data.size() == static_cast<std::size_t>(mel.frames) * 80);
  }
  CHECK(log_mel(tone(440, 64000)).frames == 400);
}

TEST_CASE("a pure tone peaks in the band around its frequency") {
  FrontendConfig cfg;
  auto fb = mel_filterbank(cfg);
  for (double hz : {300.0, 1000.0, 4000.0}) {
    auto mel = log_mel(tone(hz, 16000), cfg);
    const auto frame = mel.frame(50);
    const auto best = std::max_element(frame.begin(), frame.end()) - frame.begin();
    const auto bin = static_cast<std::size_t>(std::lround(hz / (16000.0 / 512)));
    double top = 0.0;
    long expect = 0;
    for (std::size_t m = 0; m < fb.size(); ++m)
      if (fb[m][bin] > top) top = fb[m][bin], expect = static_cast<long>(m);
    CHECK(std::abs(best - expect) <= 1);
  }
}

TEST_CASE("silence maps to the log floor") {
  Waveform w;
  w.samples.assign(3200, 0.0f);
  auto mel = log_mel(w);
  for (float v : mel.data) CHECK(v == doctest::Approx(std::log(1e-10)));
}

TEST_CASE("energy scales additively in the log domain") {
  auto a = log_mel(tone(1000, 8000, 0.1));
  auto b = log_mel(tone(1000, 8000, 0.2));
  // Band at the peak is far above the floor, so doubling amplitude adds ln 4.
  const auto f = a.frame(20);
  const auto peak = std::max_element(f.begin(), f.end()) - f.begin();
  CHECK(b.at(20, static_cast<int>(peak)) - a.at(20, static_cast<int>(peak)) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-4));
}

TEST_CASE("resampled inputs are rejected when the rate differs") {
  Waveform w = tone(440, 1000);
  w.sample_rate = 8000;
  CHECK_THROWS_AS(log_mel(w), ValidationError);
}

TEST_CASE("concat along time") {
  auto a = log_mel(tone(300, 1600));
  auto b = log_mel(tone(600, 3200));
  auto c = concat_time(a, b);
  CHECK(c.frames == a.frames + b.frames);
  CHECK(c.at(a.frames, 5) == b.at(0, 5));
}

TEST_CASE("log-mel ignores global phase") {
  Waveform w = tone(523.0, 16000, 0.3);
  Waveform neg = w;
  for (auto& s : neg.samples) s = -s;
  CHECK(log_mel(w).data == log_mel(neg).data);
}
