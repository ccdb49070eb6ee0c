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
#include <filesystem>
#include <map>
#include <set>

#include "cryssl/error.hpp"
#include "cryssl/features.hpp"
#include "cryssl/synth.hpp"

using namespace cryssl;

namespace {

std::string file_bytes(const std::string& path) { return read_text_file(path); }

double median_f0(const Waveform& w) {
  auto t = estimate_f0(w);
  std::vector<double> v;
  for (std::size_t i = 0; i < t.f0_hz.size(); ++i)
    if (t.voiced[i]) v.push_back(t.f0_hz[i]);
  REQUIRE_FALSE(v.empty());
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("spec defaults and validation") {
  CrySynthSpec s;
  CHECK(s.band(0) == std::pair<double, double>{250.0, 350.0});
  CHECK(s.band(1) == std::pair<double, double>{450.0, 550.0});
  CHECK(s.am_rate(1) == 5.0);
  CHECK_NOTHROW(s.validate());
  s.f0_bands = {{200, 300}};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.am_depth = 2.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  GeneralSynthSpec g;
  g.clips = 0;
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("recordings carry their class pitch") {
  CrySynthSpec s;
  for (int c = 0; c < 2; ++c)
    for (std::uint64_t p = 0; p < 3; ++p) {
      auto w = synth_cry_recording(s, c, p, 100 + p);
      CHECK(w.sample_rate == 16000);
      CHECK(w.duration_s() >= 4.5);
      CHECK(w.duration_s() <= 6.0);
      const double f0 = median_f0(w);
      CHECK(f0 >= s.band(c).first * 0.97);
      CHECK(f0 <= s.band(c).second * 1.03);
      float peak = 0.0f;
      for (float v : w.samples) peak = std::max(peak, std::abs(v));
      CHECK(peak <= 1.0f);
      CHECK(peak > 0.05f);
    }
}

TEST_CASE("corpus layout, labels and byte-level determinism") {
  CrySynthSpec s;
  s.patients_per_class = 3;
  s.recordings_per_patient = 2;
  s.unlabeled_patients = 2;
  s.seed = 4;
  auto m = write_cry_corpus(s, "synth_a");
  auto m2 = write_cry_corpus(s, "synth_b");
  CHECK(m.records.size() == (2 * 3 + 2) * 2);
  CHECK(m.source_tag == "synthetic_cry");
  std::map<std::string, int> per_patient;
  int unlabelled = 0;
  for (const auto& r : m.records) {
    ++per_patient[r.patient_id];
    if (!r.sarnat) {
      ++unlabelled;
      CHECK(r.patient_id[0] == 'u');
      CHECK_FALSE(r.trigger.has_value());
    } else {
      CHECK(r.patient_id[0] == 'p');
    }
    CHECK(std::filesystem::exists(m.resolve(r)));
    CHECK(file_bytes(m.resolve(r)) == file_bytes(m2.resolve(r)));
  }
  CHECK(unlabelled == 4);
  for (const auto& [p, n] : per_patient) CHECK(n == 2);
  CHECK(load_manifest("synth_a/manifest.jsonl").records == m.records);
  // Every labelled patient's recordings share one class.
  std::map<std::string, std::set<int>> classes;
  for (const auto& r : m.records)
    if (r.sarnat) classes[r.patient_id].insert(*collapse_sarnat(r));
  for (const auto& [p, c] : classes) CHECK(c.size() == 1);
}

TEST_CASE("general corpus") {
  GeneralSynthSpec g;
  g.clips = 10;
  g.seed = 2;
  auto m = write_general_corpus(g, "synth_general");
  CHECK(m.records.size() == 10);
  std::set<std::string> ids;
  for (const auto& r : m.records) {
    ids.insert(r.recording_id);
    CHECK_FALSE(r.sarnat.has_value());
    auto w = read_wav(m.resolve(r));
    CHECK(w.duration_s() == doctest::Approx(r.duration_s).epsilon(1e-3));
  }
  CHECK(ids.size() == 10);
  CHECK(synth_general_clip(g, 5).samples == synth_general_clip(g, 5).samples);
  CHECK(synth_general_clip(g, 5).samples != synth_general_clip(g, 6).samples);
}
