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

#include "cryssl/mel.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "cryssl/error.hpp"

namespace cryssl {

int FrontendConfig::window_samples() const {
  return static_cast<int>(std::lround(window_s * sample_rate));
}

int FrontendConfig::hop_samples() const {
  return static_cast<int>(std::lround(hop_s * sample_rate));
}

void FrontendConfig::validate() const {
  if (sample_rate <= 0 || n_mels <= 0 || hop_samples() <= 0 || window_samples() <= 0)
    throw ConfigError("frontend: rates, window and hop must be positive");
  if (n_fft < window_samples()) throw ConfigError("frontend: n_fft shorter than window");
  if (!(fmin >= 0.0 && fmin < fmax)) throw ConfigError("frontend: need 0 <= fmin < fmax");
  if (fmax > sample_rate / 2.0) throw ConfigError("frontend: fmax above Nyquist");
  if (!(log_floor > 0.0)) throw ConfigError("frontend: log_floor must be positive");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<std::vector<double>> mel_filterbank(const FrontendConfig& cfg) {
  const int bins = cfg.n_fft / 2 + 1;
  const double lo = hz_to_mel(cfg.fmin), hi = hz_to_mel(cfg.fmax);
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / (cfg.n_mels + 1));
  std::vector<std::vector<double>> fb(static_cast<std::size_t>(cfg.n_mels),
                                      std::vector<double>(static_cast<std::size_t>(bins), 0.0));
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
      double v = 0.0;
      if (f > left && f <= centre) v = (f - left) / (centre - left);
      else if (f > centre && f < right) v = (right - f) / (right - centre);
      fb[m][k] = v;
    }
  }
  return fb;
}

namespace {

// FFTW planning is not thread-safe; plans are created once per size under a
// lock and executed with the new-array interface afterwards.

fftw_plan plan_for(int n) {
  static std::mutex mu;
  static std::map<int, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  double* in = fftw_alloc_real(static_cast<std::size_t>(n));
  fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
  fftw_plan p = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  plans.emplace(n, p);
  return p;
}

}  // namespace

std::vector<std::vector<double>> power_spectrogram(std::span<const float> samples, int window,
                                                   int hop, int n_fft) {
  const long n = static_cast<long>(samples.size());
  const long frames = (n + hop - 1) / hop;
  const int bins = n_fft / 2 + 1;
  std::vector<double> hann(static_cast<std::size_t>(window));
  for (int i = 0; i < window; ++i)
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / window);

  fftw_plan plan = plan_for(n_fft);
  double* in = fftw_alloc_real(static_cast<std::size_t>(n_fft));
  fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(bins));
  std::vector<std::vector<double>> power(static_cast<std::size_t>(frames),
                                         std::vector<double>(static_cast<std::size_t>(bins)));
  const long offset = hop / 2 - window / 2;
  for (long t = 0; t < frames; ++t) {
    const long start = t * hop + offset;
    for (int i = 0; i < n_fft; ++i) in[i] = 0.0;
    for (int i = 0; i < window; ++i) {
      const long s = start + i;
      if (s >= 0 && s < n) in[i] = samples[static_cast<std::size_t>(s)] * hann[i];
    }
    fftw_execute_dft_r2c(plan, in, out);
    for (int k = 0; k < bins; ++k) power[t][k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
  }
  fftw_free(in);
  fftw_free(out);
  return power;
}

MelSpectrogram log_mel(const Waveform& w, const FrontendConfig& cfg) {
  cfg.validate();
  if (w.sample_rate != cfg.sample_rate)
    throw ValidationError("log_mel: waveform rate " + std::to_string(w.sample_rate) +
                          " != configured " + std::to_string(cfg.sample_rate));
  if (w.empty()) throw ValidationError("log_mel: empty waveform");
  const auto fb = mel_filterbank(cfg);
  const auto power =
      power_spectrogram(w.samples, cfg.window_samples(), cfg.hop_samples(), cfg.n_fft);
  MelSpectrogram mel;
  mel.frames = static_cast<int>(power.size());
  mel.n_mels = cfg.n_mels;
  mel.frame_rate = static_cast<double>(cfg.sample_rate) / cfg.hop_samples();
  mel.data.resize(static_cast<std::size_t>(mel.frames) * mel.n_mels);
  // nonzero support of each triangle
  std::vector<std::pair<std::size_t, std::size_t>> support(static_cast<std::size_t>(cfg.n_mels));
  for (int m = 0; m < cfg.n_mels; ++m) {
    const auto& f = fb[m];
    std::size_t lo = 0, hi = 0;
    while (lo < f.size() && f[lo] == 0.0) ++lo;
    for (hi = lo; hi < f.size() && f[hi] != 0.0; ++hi) {}
    support[m] = {lo, hi};
  }
  for (int t = 0; t < mel.frames; ++t) {
    const auto& p = power[t];
    for (int m = 0; m < cfg.n_mels; ++m) {
      const auto& f = fb[m];
      double e = 0.0;
      for (std::size_t k = support[m].first; k < support[m].second; ++k) e += f[k] * p[k];
      mel.at(t, m) = static_cast<float>(std::log(e + cfg.log_floor));
    }
  }
  return mel;
}

MelSpectrogram concat_time(const MelSpectrogram& a, const MelSpectrogram& b) {
  if (a.n_mels != b.n_mels) throw ShapeError("concat_time: mel band count mismatch");
  MelSpectrogram out = a;
  out.frames = a.frames + b.frames;
  out.data.insert(out.data.end(), b.data.begin(), b.data.end());
  return out;
}

}  // namespace cryssl
