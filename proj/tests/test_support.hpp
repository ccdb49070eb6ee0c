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

// Shared fixtures for the unit tests.

#include <string>

#include "cryssl/catalog.hpp"

namespace cryssl::testing {

// `patients` patients with `per_patient` recordings each; patient i gets
// sarnat normal when i % 2 == 0 and moderate otherwise, trigger i % 3.
inline Manifest toy_manifest(int patients, int per_patient, bool with_split = false) {
  Manifest m;
  m.source_tag = "toy";
  for (int p = 0; p < patients; ++p) {
    for (int r = 0; r < per_patient; ++r) {
      RecordingMeta meta;
      meta.patient_id = "p" + std::to_string(p);
      meta.recording_id = meta.patient_id + "_r" + std::to_string(r);
      meta.path = "audio/" + meta.recording_id + ".wav";
      meta.duration_s = 4.5 + 0.1 * r;
      meta.sarnat = p % 2 == 0 ? Sarnat::kNormal : Sarnat::kModerate;
      meta.trigger = static_cast<Trigger>(p % 3);
      if (with_split) meta.split = Split::kTrain;
      m.records.push_back(meta);
    }
  }
  return m;
}

}  // namespace cryssl::testing
