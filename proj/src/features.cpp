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

#include "cryssl/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cryssl/error.hpp"
#include "cryssl/mel.hpp"

namespace cryssl {

namespace {

constexpr int kRate = 16000;
constexpr int kWindow = 400;
constexpr int kHop = 160;
constexpr int kNfft = 512;
constexpr int kMfcc = 13;
constexpr int kMfccBands = 40;
constexpr int kF0Window = 800;

const char* const kFunctionals[] = {"mean", "std", "p10", "p50", "p90", "range"};

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void append_functionals(const std::vector<double>& v, std::vector<double>& out) {
  if (v.empty()) {
    out.insert(out.end(), 6, 0.0);
    return;
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  out.push_back(mean);
  out.push_back(std::sqrt(var));
  out.push_back(percentile(v, 0.10));
  out.push_back(percentile(v, 0.50));
  out.push_back(percentile(v, 0.90));
  out.push_back(*mx - *mn);
}

// Samples of the frame centred on t*hop + hop/2, zero outside the signal.
void frame_at(const std::vector<float>& x, int t, int window, std::vector<double>& out) {
  out.assign(window, 0.0);
  const long start = static_cast<long>(t) * kHop + kHop / 2 - window / 2;
  for (int i = 0; i < window; ++i) {
    const long j = start + i;
    if (j >= 0 && j < static_cast<long>(x.size())) out[i] = x[j];
  }
}

}  // namespace

std::vector<std::string> functional_feature_names() {
  std::vector<std::string> desc;
  for (int i = 0; i < kMfcc; ++i) desc.push_back("mfcc_" + std::to_string(i));
  for (int i = 0; i < kMfcc; ++i) desc.push_back("delta_mfcc_" + std::to_string(i));
  desc.insert(desc.end(), {"log_energy", "zcr", "spectral_centroid_hz", "f0_hz"});
  std::vector<std::string> names;
  for (const auto& d : desc)
    for (const char* f : kFunctionals) names.push_back(d + "_" + f);
  names.push_back("voiced_fraction");
  return names;
}

F0Track estimate_f0(const Waveform& w_in, double fmin_hz, double fmax_hz) {
  const Waveform w = w_in.sample_rate == kRate ? w_in : resample(w_in, kRate);
  const int frames = static_cast<int>((w.size() + kHop - 1) / kHop);
  const int lag_min = std::max(2, static_cast<int>(std::floor(kRate / fmax_hz)));
  const int lag_max = std::min(kF0Window / 2, static_cast<int>(std::ceil(kRate / fmin_hz)));
  F0Track tr;
  tr.f0_hz.assign(frames, 0.0);
  tr.voiced.assign(frames, false);

  std::vector<double> buf, energy(frames, 0.0);
  for (int t = 0; t < frames; ++t) {
    frame_at(w.samples, t, kF0Window, buf);
    double e = 0.0;
    for (double v : buf) e += v * v;
    energy[t] = e / kF0Window;
  }
  const double loudest = frames ? *std::max_element(energy.begin(), energy.end()) : 0.0;
  if (loudest <= 1e-12) return tr;

  std::vector<double> r(lag_max + 2, 0.0);
  for (int t = 0; t < frames; ++t) {
    if (energy[t] < loudest * 1e-3) continue;
    frame_at(w.samples, t, kF0Window, buf);
    double mean = 0.0;
    for (double v : buf) mean += v;
    mean /= kF0Window;
    for (double& v : buf) v -= mean;
    for (int lag = lag_min - 1; lag <= lag_max + 1; ++lag) {
      double xy = 0.0, xx = 0.0, yy = 0.0;
      for (int n = 0; n + lag < kF0Window; ++n) {
        xy += buf[n] * buf[n + lag];
        xx += buf[n] * buf[n];
        yy += buf[n + lag] * buf[n + lag];
      }
      r[lag] = xx > 0.0 && yy > 0.0 ? xy / std::sqrt(xx * yy) : 0.0;
    }
    double best = -1.0;
    for (int lag = lag_min; lag <= lag_max; ++lag) best = std::max(best, r[lag]);
    if (best < 0.6) continue;
    int pick = -1;
    for (int lag = lag_min; lag <= lag_max; ++lag)
      if (r[lag] >= 0.9 * best && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
        pick = lag;
        break;
      }
    if (pick < 0) continue;
    const double a = r[pick - 1], b = r[pick], c = r[pick + 1];
    const double den = a - 2.0 * b + c;
    const double shift = den < 0.0 ? std::clamp(0.5 * (a - c) / den, -0.5, 0.5) : 0.0;
    tr.f0_hz[t] = kRate / (pick + shift);
    tr.voiced[t] = true;
  }
  return tr;
}

std::vector<double> extract_functionals(const Waveform& w_in) {
  if (w_in.empty()) throw ValidationError("features: empty waveform");
  const Waveform w = w_in.sample_rate == kRate ? w_in : resample(w_in, kRate);
  double peak = 0.0;
  for (float s : w.samples) peak = std::max(peak, static_cast<double>(std::abs(s)));
  if (peak == 0.0) return std::vector<double>(kFunctionalDim, 0.0);

  FrontendConfig fc;
  fc.n_mels = kMfccBands;
  const auto mel = log_mel(w, fc);
  const auto power = power_spectrogram(w.samples, kWindow, kHop, kNfft);
  const int frames = mel.frames;

  std::vector<std::vector<double>> desc(3 * 1 + 2 * kMfcc);
  auto& log_energy = desc[2 * kMfcc];
  auto& zcr = desc[2 * kMfcc + 1];
  auto& centroid = desc[2 * kMfcc + 2];

  std::vector<std::vector<double>> mfcc(frames, std::vector<double>(kMfcc));
  const double norm0 = std::sqrt(1.0 / kMfccBands), norm = std::sqrt(2.0 / kMfccBands);
  for (int t = 0; t < frames; ++t)
    for (int k = 0; k < kMfcc; ++k) {
      double s = 0.0;
      for (int m = 0; m < kMfccBands; ++m)
        s += mel.at(t, m) * std::cos(std::numbers::pi * k * (m + 0.5) / kMfccBands);
      mfcc[t][k] = s * (k == 0 ? norm0 : norm);
    }
  for (int t = 0; t < frames; ++t)
    for (int k = 0; k < kMfcc; ++k) {
      desc[k].push_back(mfcc[t][k]);
      double num = 0.0;
      for (int d = 1; d <= 2; ++d) {
        const int a = std::min(frames - 1, t + d), b = std::max(0, t - d);
        num += d * (mfcc[a][k] - mfcc[b][k]);
      }
      desc[kMfcc + k].push_back(num / 10.0);
    }

  std::vector<double> buf;
  for (int t = 0; t < frames; ++t) {
    frame_at(w.samples, t, kWindow, buf);
    double e = 0.0;
    int crossings = 0;
    for (int i = 0; i < kWindow; ++i) {
      e += buf[i] * buf[i];
      if (i > 0 && ((buf[i] >= 0.0) != (buf[i - 1] >= 0.0))) ++crossings;
    }
    log_energy.push_back(std::log(e + 1e-10));
    zcr.push_back(static_cast<double>(crossings) / (kWindow - 1));
    double num = 0.0, den = 0.0;
    const auto& p = power[t];
    for (std::size_t k = 0; k < p.size(); ++k) {
      num += p[k] * static_cast<double>(k) * kRate / kNfft;
      den += p[k];
    }
    centroid.push_back(den > 0.0 ? num / den : 0.0);
  }

  std::vector<double> out;
  out.reserve(kFunctionalDim);
  for (const auto& d : desc) append_functionals(d, out);
  const auto f0 = estimate_f0(w);
  std::vector<double> voiced;
  for (std::size_t t = 0; t < f0.f0_hz.size(); ++t)
    if (f0.voiced[t]) voiced.push_back(f0.f0_hz[t]);
  append_functionals(voiced, out);
  out.push_back(f0.f0_hz.empty() ? 0.0
                                 : static_cast<double>(voiced.size()) / static_cast<double>(f0.f0_hz.size()));
  for (double& v : out)
    if (!std::isfinite(v)) v = 0.0;
  return out;
}

}  // namespace cryssl
