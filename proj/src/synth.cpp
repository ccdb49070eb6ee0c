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

#include "cryssl/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "cryssl/error.hpp"

namespace cryssl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double uniform(Rng& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

double log_uniform(Rng& rng, double a, double b) { return std::exp(uniform(rng, std::log(a), std::log(b))); }

// Resonance gain of a formant at f (Lorentzian, peak 1).
double formant(double f, double centre, double bw) {
  const double x = (f - centre) / (0.5 * bw);
  return 1.0 / (1.0 + x * x);
}

// Second-order band-pass (RBJ constant 0 dB peak gain) over white noise.
std::vector<double> band_noise(Rng& rng, std::size_t n, double centre, double q, int rate) {
  std::normal_distribution<double> g(0.0, 1.0);
  const double w0 = kTwoPi * centre / rate, alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  const double b0 = alpha / a0, b2 = -alpha / a0, a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;
  std::vector<double> y(n);
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = g(rng);
    y[i] = b0 * x + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y[i];
  }
  return y;
}

void normalise_peak(std::vector<double>& x, double peak) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  if (m > 0.0)
    for (double& v : x) v *= peak / m;
}

Waveform to_waveform(const std::vector<double>& x, int rate) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) w.samples[i] = static_cast<float>(std::clamp(x[i], -1.0, 1.0));
  return w;
}

std::size_t draw_length(Rng& rng, double lo, double hi, int rate) {
  return static_cast<std::size_t>(std::llround(uniform(rng, lo, hi) * rate));
}

Sarnat sarnat_for(int cls, int index) {
  if (cls == 0) return Sarnat::kNormal;
  static const Sarnat injured[] = {Sarnat::kMild, Sarnat::kModerate, Sarnat::kSevere};
  return injured[index % 3];
}

Trigger trigger_for(int cls) {
  static const Trigger t[] = {Trigger::kPain, Trigger::kHunger, Trigger::kDiscomfort};
  return t[cls % 3];
}

}  // namespace

void CrySynthSpec::validate() const {
  if (classes < 2) throw ConfigError("synth: classes must be >= 2");
  if (patients_per_class < 1 || recordings_per_patient < 1 || unlabeled_patients < 0)
    throw ConfigError("synth: patient and recording counts must be positive");
  if (!(min_duration_s > 0.0) || max_duration_s < min_duration_s)
    throw ConfigError("synth: invalid duration range");
  if (!f0_bands.empty() && static_cast<int>(f0_bands.size()) != classes)
    throw ConfigError("synth: f0_bands must list one band per class");
  if (!am_rates.empty() && static_cast<int>(am_rates.size()) != classes)
    throw ConfigError("synth: am_rates must list one rate per class");
  for (int c = 0; c < classes; ++c) {
    const auto [lo, hi] = band(c);
    if (!(lo > 0.0) || hi < lo || hi * 2.0 > sample_rate / 2.0) throw ConfigError("synth: invalid F0 band");
  }
  if (am_depth < 0.0 || am_depth > 1.0) throw ConfigError("synth: am_depth must lie in [0, 1]");
  if (sample_rate < 8000) throw ConfigError("synth: sample_rate must be >= 8000");
}

std::pair<double, double> CrySynthSpec::band(int c) const {
  if (!f0_bands.empty()) return f0_bands[c];
  return {250.0 + 200.0 * c, 350.0 + 200.0 * c};
}

double CrySynthSpec::am_rate(int c) const { return am_rates.empty() ? 3.0 + 2.0 * c : am_rates[c]; }

void GeneralSynthSpec::validate() const {
  if (clips < 1) throw ConfigError("synth: clips must be >= 1");
  if (!(min_duration_s > 0.0) || max_duration_s < min_duration_s)
    throw ConfigError("synth: invalid duration range");
  if (sample_rate < 8000) throw ConfigError("synth: sample_rate must be >= 8000");
}

Waveform synth_cry_recording(const CrySynthSpec& spec, int cls, std::uint64_t patient_seed,
                             std::uint64_t recording_seed) {
  const int rate = spec.sample_rate;
  Rng prng(patient_seed);
  const auto [lo, hi] = spec.band(cls);
  const double f0_centre = uniform(prng, lo, hi);
  const double tilt = uniform(prng, 0.8, 1.6);
  const double f1 = uniform(prng, 800.0, 1400.0), f2 = uniform(prng, 2000.0, 3500.0);
  const double bw1 = uniform(prng, 200.0, 500.0), bw2 = uniform(prng, 300.0, 800.0);
  const double breath = uniform(prng, 0.02, 0.12);
  const double vib_rate = uniform(prng, 4.0, 8.0);

  Rng rng(recording_seed);
  const std::size_t n = draw_length(rng, spec.min_duration_s, spec.max_duration_s, rate);
  std::vector<double> x(n, 0.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const double am = spec.am_rate(cls);

  std::size_t pos = static_cast<std::size_t>(uniform(rng, 0.0, 0.2) * rate);
  while (pos < n) {
    const std::size_t len = std::min(n - pos, draw_length(rng, 0.6, 1.3, rate));
    const double f_unit = f0_centre * uniform(rng, 0.97, 1.03);
    const double rise = uniform(rng, 0.02, 0.08);
    const double am_phase = uniform(rng, 0.0, kTwoPi);
    const double level = uniform(rng, 0.6, 1.0);
    double phase = uniform(rng, 0.0, kTwoPi);
    for (std::size_t i = 0; i < len; ++i) {
      const double t = static_cast<double>(i) / rate;
      const double u = static_cast<double>(i) / static_cast<double>(len);
      const double contour = 1.0 + rise * std::sin(std::numbers::pi * u) + 0.01 * std::sin(kTwoPi * vib_rate * t);
      const double f0 = f_unit * contour;
      phase += kTwoPi * f0 / rate;
      const double env = std::min({1.0, u / 0.08, (1.0 - u) / 0.15});
      const double mod = 1.0 - spec.am_depth * 0.5 * (1.0 + std::sin(kTwoPi * am * t + am_phase));
      double s = 0.0;
      for (int k = 1; k * f0 < 0.45 * rate; ++k) {
        const double fk = k * f0;
        const double amp = std::pow(static_cast<double>(k), -tilt) *
                           (0.3 + formant(fk, f1, bw1) + 0.6 * formant(fk, f2, bw2));
        s += amp * std::sin(k * phase);
      }
      x[pos + i] += level * env * mod * (s + breath * g(rng));
    }
    pos += len + draw_length(rng, 0.1, 0.35, rate);
  }
  normalise_peak(x, 0.8);
  const double noise = std::pow(10.0, -uniform(rng, 25.0, 40.0) / 20.0);
  for (double& v : x) v += noise * g(rng);
  const double gain = std::pow(10.0, uniform(rng, -12.0, 0.0) / 20.0);
  for (double& v : x) v *= gain;
  return to_waveform(x, rate);
}

Waveform synth_general_clip(const GeneralSynthSpec& spec, std::uint64_t clip_seed) {
  const int rate = spec.sample_rate;
  Rng rng(clip_seed);
  const std::size_t n = draw_length(rng, spec.min_duration_s, spec.max_duration_s, rate);
  std::vector<double> x(n, 0.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const int kind = std::uniform_int_distribution<int>(0, 4)(rng);
  switch (kind) {
    case 0: {  // harmonic complex with slow glide
      const double f0 = log_uniform(rng, 80.0, 1000.0), glide = uniform(rng, -0.3, 0.3);
      const double tilt = uniform(rng, 0.5, 2.0);
      double phase = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double f = f0 * (1.0 + glide * static_cast<double>(i) / n);
        phase += kTwoPi * f / rate;
        double s = 0.0;
        for (int k = 1; k * f < 0.45 * rate && k <= 40; ++k) s += std::pow(k, -tilt) * std::sin(k * phase);
        x[i] = s;
      }
      break;
    }
    case 1: {  // band-limited noise
      x = band_noise(rng, n, log_uniform(rng, 150.0, 6000.0), uniform(rng, 0.7, 6.0), rate);
      break;
    }
    case 2: {  // tone sequence
      std::size_t pos = 0;
      while (pos < n) {
        const std::size_t len = std::min(n - pos, draw_length(rng, 0.1, 0.6, rate));
        const double f = log_uniform(rng, 100.0, 4000.0);
        for (std::size_t i = 0; i < len; ++i) {
          const double u = static_cast<double>(i) / len;
          x[pos + i] = std::min({1.0, u / 0.05, (1.0 - u) / 0.2}) * std::sin(kTwoPi * f * i / rate);
        }
        pos += len + draw_length(rng, 0.0, 0.2, rate);
      }
      break;
    }
    case 3: {  // exponential chirp
      const double fa = log_uniform(rng, 100.0, 6000.0), fb = log_uniform(rng, 100.0, 6000.0);
      double phase = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double f = fa * std::pow(fb / fa, static_cast<double>(i) / n);
        phase += kTwoPi * f / rate;
        x[i] = std::sin(phase);
      }
      break;
    }
    default: {  // click train through a decaying resonance
      const double click_rate = log_uniform(rng, 2.0, 40.0), fr = log_uniform(rng, 300.0, 5000.0);
      const double decay = std::exp(-1.0 / (uniform(rng, 0.002, 0.02) * rate));
      const double c = 2.0 * decay * std::cos(kTwoPi * fr / rate);
      double y1 = 0.0, y2 = 0.0, next = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double in = 0.0;
        if (static_cast<double>(i) >= next) {
          in = 1.0;
          next += rate / click_rate * uniform(rng, 0.7, 1.3);
        }
        const double y = in + c * y1 - decay * decay * y2;
        y2 = y1;
        y1 = y;
        x[i] = y;
      }
      break;
    }
  }
  normalise_peak(x, 0.8);
  const double noise = std::pow(10.0, -uniform(rng, 20.0, 40.0) / 20.0);
  for (double& v : x) v += noise * g(rng);
  const double gain = std::pow(10.0, uniform(rng, -12.0, 0.0) / 20.0);
  for (double& v : x) v *= gain;
  return to_waveform(x, rate);
}

Manifest write_cry_corpus(const CrySynthSpec& spec, const std::string& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "audio");
  Manifest m;
  m.source_tag = "synthetic_cry";
  m.base_dir = out_dir;
  const int labelled = spec.classes * spec.patients_per_class;
  const int total = labelled + spec.unlabeled_patients;
  for (int p = 0; p < total; ++p) {
    const bool has_label = p < labelled;
    const auto pid = fmt::format("{}{:04d}", has_label ? "p" : "u", p);
    const int cls = has_label ? p % spec.classes
                              : static_cast<int>(derive_seed(spec.seed, "class/" + pid) % spec.classes);
    const auto patient_seed = derive_seed(spec.seed, "patient/" + pid);
    for (int r = 0; r < spec.recordings_per_patient; ++r) {
      RecordingMeta meta;
      meta.recording_id = fmt::format("{}_r{:02d}", pid, r);
      meta.patient_id = pid;
      meta.path = "audio/" + meta.recording_id + ".wav";
      const auto w = synth_cry_recording(spec, cls, patient_seed, derive_seed(patient_seed, meta.recording_id));
      meta.duration_s = w.duration_s();
      if (has_label) {
        meta.sarnat = sarnat_for(cls, p / spec.classes);
        meta.trigger = trigger_for(cls);
      }
      write_wav((fs::path(out_dir) / meta.path).string(), w);
      m.records.push_back(std::move(meta));
    }
  }
  save_manifest(m, (fs::path(out_dir) / "manifest.jsonl").string());
  return m;
}

Manifest write_general_corpus(const GeneralSynthSpec& spec, const std::string& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "audio");
  Manifest m;
  m.source_tag = "synthetic_general";
  m.base_dir = out_dir;
  for (int c = 0; c < spec.clips; ++c) {
    RecordingMeta meta;
    meta.recording_id = fmt::format("g{:05d}", c);
    meta.patient_id = meta.recording_id;
    meta.path = "audio/" + meta.recording_id + ".wav";
    const auto w = synth_general_clip(spec, derive_seed(spec.seed, meta.recording_id));
    meta.duration_s = w.duration_s();
    write_wav((fs::path(out_dir) / meta.path).string(), w);
    m.records.push_back(std::move(meta));
  }
  save_manifest(m, (fs::path(out_dir) / "manifest.jsonl").string());
  return m;
}

}  // namespace cryssl
