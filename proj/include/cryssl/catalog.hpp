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
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cryssl/util.hpp"

namespace cryssl {

enum class Sarnat { kNormal, kMild, kModerate, kSevere };
enum class Trigger { kPain, kHunger, kDiscomfort };
enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Sarnat s);
std::string_view to_string(Trigger t);
std::string_view to_string(Split s);
Sarnat parse_sarnat(std::string_view s);
Trigger parse_trigger(std::string_view s);
Split parse_split(std::string_view s);

struct RecordingMeta {
  std::string recording_id;
  std::string patient_id;
  std::string path;
  double duration_s = 0.0;
  std::optional<Sarnat> sarnat;
  std::optional<Trigger> trigger;
  std::optional<Split> split;

  bool operator==(const RecordingMeta&) const = default;
};

struct Manifest {
  std::vector<RecordingMeta> records;
  std::string source_tag;
  // Directory relative audio paths are resolved against. Not serialised.
  std::string base_dir;

  // Absolute (or base_dir-joined) audio path of a record.
  std::string resolve(const RecordingMeta& r) const;
  // Records with the given split, in manifest order.
  std::vector<RecordingMeta> with_split(Split s) const;
  std::vector<std::string> patients() const;  // sorted, unique
};

enum class TaskName { kNeuroInjury, kTrigger };

struct TaskSpec {
  TaskName name;
  std::vector<std::string> classes;
  std::function<std::optional<int>(const RecordingMeta&)> label_fn;

  int num_classes() const { return static_cast<int>(classes.size()); }
  std::optional<int> label(const RecordingMeta& m) const { return label_fn(m); }
  std::string_view name_str() const;

  static TaskSpec neuro_injury();
  static TaskSpec trigger();
  static TaskSpec by_name(std::string_view name);
};

// normal -> 0; mild/moderate/severe -> 1; absent -> absent.
std::optional<int> collapse_sarnat(const RecordingMeta& meta);
// pain -> 0, hunger -> 1, discomfort -> 2.
std::optional<int> trigger_index(const RecordingMeta& meta);

// Manifest wire format: JSON Lines, one record object per line with keys
// recording_id, patient_id, path, duration_s, sarnat, trigger, split (absent
// optional fields omitted). An optional first line {"source_tag": "..."}
// names the corpus. Blank lines are ignored.
Manifest parse_manifest(std::string_view text, std::string base_dir = {});
Manifest load_manifest(const std::string& path);
std::string format_manifest(const Manifest& m);
void save_manifest(const Manifest& m, const std::string& path);

// Throws ValidationError on duplicate ids or non-positive durations.
void validate_manifest(const Manifest& m);

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

// Assigns every patient (and so all of its recordings) to exactly one split.
// Patient counts per split are round(fraction * P), with train absorbing the
// remainder and every split holding at least one patient.
Manifest patient_disjoint_split(const Manifest& manifest, SplitFractions fractions,
                                std::uint64_t seed);

// patient_disjoint_split over the patients holding at least one `task` label.
// Patients without any label join train, where only self-supervised stages
// read them.
Manifest labelled_patient_split(const Manifest& manifest, const TaskSpec& task,
                                SplitFractions fractions, std::uint64_t seed);

// Draws round(fraction * N) labelled train recordings for `task`, taking
// whole patients where the budget allows, with at least one recording per
// class. Returned ids follow manifest order.
std::vector<std::string> subset_sample(const Manifest& manifest, const TaskSpec& task,
                                       double fraction, std::uint64_t seed);

// weight_c = N / (K * N_c). Throws if any class is empty.
std::vector<double> class_weights(std::span<const int> labels, int num_classes);

// Draws indices with replacement, P(i) proportional to weights[label(i)].
class WeightedSampler {
 public:
  WeightedSampler(std::span<const int> labels, int num_classes);
  std::size_t draw(Rng& rng);
  const std::vector<double>& class_weights() const { return class_weights_; }

 private:
  std::vector<double> class_weights_;
  std::vector<double> cumulative_;
};

}  // namespace cryssl
