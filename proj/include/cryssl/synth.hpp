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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cryssl/audio.hpp"
#include "cryssl/catalog.hpp"

namespace cryssl {

// Labelled cry-like corpus. Each recording is a sequence of harmonic cry
// units whose F0 lies in its class band and whose amplitude is modulated at
// the class AM rate. Every patient has its own timbre (spectral tilt, two
// formants, breathiness, F0 centre within the band), so recordings of one
// patient resemble each other more than those of another.
struct CrySynthSpec {
  int classes = 2;
  int patients_per_class = 20;
  int recordings_per_patient = 2;
  // Extra patients of any class written without labels (adaptation pool).
  int unlabeled_patients = 0;
  double min_duration_s = 4.5;
  double max_duration_s = 6.0;
  // Defaults for class c when empty: [250 + 200c, 350 + 200c] Hz, 3 + 2c Hz.
  std::vector<std::pair<double, double>> f0_bands;
  std::vector<double> am_rates;
  double am_depth = 0.5;
  int sample_rate = 16000;
  std::uint64_t seed = 0;

  void validate() const;
  std::pair<double, double> band(int c) const;
  double am_rate(int c) const;
};

// Unlabelled general-audio corpus: harmonic complexes, band noise, tone
// sequences, chirps and click trains.
struct GeneralSynthSpec {
  int clips = 100;
  double min_duration_s = 4.5;
  double max_duration_s = 6.0;
  int sample_rate = 16000;
  std::uint64_t seed = 0;

  void validate() const;
};

// Class c maps to sarnat normal (c = 0) or mild/moderate/severe (c >= 1,
// rotating), and to trigger c mod 3.
Waveform synth_cry_recording(const CrySynthSpec& spec, int cls, std::uint64_t patient_seed,
                             std::uint64_t recording_seed);
Waveform synth_general_clip(const GeneralSynthSpec& spec, std::uint64_t clip_seed);

// Write 16-bit WAVs under out_dir/audio and out_dir/manifest.jsonl (paths
// relative to out_dir). Output is bitwise identical for a fixed spec.
Manifest write_cry_corpus(const CrySynthSpec& spec, const std::string& out_dir);
Manifest write_general_corpus(const GeneralSynthSpec& spec, const std::string& out_dir);

}  // namespace cryssl
