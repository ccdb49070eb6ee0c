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

#include "cryssl/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "cryssl/error.hpp"

namespace cryssl {

using nlohmann::json;

std::string_view to_string(Sarnat s) {
  switch (s) {
    case Sarnat::kNormal: return "normal";
    case Sarnat::kMild: return "mild";
    case Sarnat::kModerate: return "moderate";
    case Sarnat::kSevere: return "severe";
  }
  return "?";
}

std::string_view to_string(Trigger t) {
  switch (t) {
    case Trigger::kPain: return "pain";
    case Trigger::kHunger: return "hunger";
    case Trigger::kDiscomfort: return "discomfort";
  }
  return "?";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Sarnat parse_sarnat(std::string_view s) {
  if (s == "normal") return Sarnat::kNormal;
  if (s == "mild") return Sarnat::kMild;
  if (s == "moderate") return Sarnat::kModerate;
  if (s == "severe") return Sarnat::kSevere;
  throw ParseError("unknown sarnat value '" + std::string(s) + "'");
}

Trigger parse_trigger(std::string_view s) {
  if (s == "pain") return Trigger::kPain;
  if (s == "hunger") return Trigger::kHunger;
  if (s == "discomfort") return Trigger::kDiscomfort;
  throw ParseError("unknown trigger value '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ParseError("unknown split value '" + std::string(s) + "'");
}

std::string Manifest::resolve(const RecordingMeta& r) const {
  std::filesystem::path p(r.path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (std::filesystem::path(base_dir) / p).string();
}

std::vector<RecordingMeta> Manifest::with_split(Split s) const {
  std::vector<RecordingMeta> out;
  for (const auto& r : records)
    if (r.split == s) out.push_back(r);
  return out;
}

std::vector<std::string> Manifest::patients() const {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.patient_id);
  return {ids.begin(), ids.end()};
}

std::string_view TaskSpec::name_str() const {
  return name == TaskName::kNeuroInjury ? "neuro_injury" : "trigger";
}

TaskSpec TaskSpec::neuro_injury() {
  return {TaskName::kNeuroInjury, {"normal", "injured"}, collapse_sarnat};
}

TaskSpec TaskSpec::trigger() {
  return {TaskName::kTrigger, {"pain", "hunger", "discomfort"}, trigger_index};
}

TaskSpec TaskSpec::by_name(std::string_view name) {
  if (name == "neuro_injury") return neuro_injury();
  if (name == "trigger") return trigger();
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

std::optional<int> collapse_sarnat(const RecordingMeta& meta) {
  if (!meta.sarnat) return std::nullopt;
  return *meta.sarnat == Sarnat::kNormal ? 0 : 1;
}

std::optional<int> trigger_index(const RecordingMeta& meta) {
  if (!meta.trigger) return std::nullopt;
  return static_cast<int>(*meta.trigger);
}

void validate_manifest(const Manifest& m) {
  std::unordered_set<std::string> seen;
  for (const auto& r : m.records) {
    if (r.recording_id.empty()) throw ValidationError("empty recording_id");
    if (!seen.insert(r.recording_id).second)
      throw ValidationError("duplicate recording_id '" + r.recording_id + "'");
    if (!(r.duration_s > 0.0) || !std::isfinite(r.duration_s))
      throw ValidationError("recording '" + r.recording_id + "' has non-positive duration_s");
  }
}

namespace {

std::string required_string(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw ParseError("manifest line " + std::to_string(line) + ": missing string field '" +
                     key + "'");
  return it->get<std::string>();
}

}  // namespace

Manifest parse_manifest(std::string_view text, std::string base_dir) {
  Manifest m;
  m.base_dir = std::move(base_dir);
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool seen_record = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object())
      throw ParseError("manifest line " + std::to_string(lineno) + ": expected an object");
    if (!seen_record && !j.contains("recording_id") && j.contains("source_tag")) {
      m.source_tag = j["source_tag"].get<std::string>();
      continue;
    }
    seen_record = true;
    RecordingMeta r;
    try {
      r.recording_id = required_string(j, "recording_id", lineno);
      r.patient_id = required_string(j, "patient_id", lineno);
      r.path = required_string(j, "path", lineno);
      auto d = j.find("duration_s");
      if (d == j.end() || !d->is_number())
        throw ParseError("manifest line " + std::to_string(lineno) +
                         ": missing numeric field 'duration_s'");
      r.duration_s = d->get<double>();
      if (j.contains("sarnat")) r.sarnat = parse_sarnat(j["sarnat"].get<std::string>());
      if (j.contains("trigger")) r.trigger = parse_trigger(j["trigger"].get<std::string>());
      if (j.contains("split")) r.split = parse_split(j["split"].get<std::string>());
    } catch (const json::exception& e) {
      throw ParseError("manifest line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ParseError& e) {
      const std::string msg = e.what();
      if (msg.rfind("manifest line", 0) == 0) throw;
      throw ParseError("manifest line " + std::to_string(lineno) + ": " + msg);
    }
    if (!(r.duration_s > 0.0))
      throw ValidationError("manifest line " + std::to_string(lineno) + ": recording '" +
                            r.recording_id + "' has non-positive duration_s");
    m.records.push_back(std::move(r));
  }
  validate_manifest(m);
  return m;
}

Manifest load_manifest(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ParseError("manifest not found: " + path);
  auto parent = std::filesystem::path(path).parent_path().string();
  return parse_manifest(read_text_file(path), parent);
}

std::string format_manifest(const Manifest& m) {
  std::string out;
  if (!m.source_tag.empty()) out += json{{"source_tag", m.source_tag}}.dump() + "\n";
  for (const auto& r : m.records) {
    // ordered_json keeps the documented field order on disk
    nlohmann::ordered_json j;
    j["recording_id"] = r.recording_id;
    j["patient_id"] = r.patient_id;
    j["path"] = r.path;
    j["duration_s"] = r.duration_s;
    if (r.sarnat) j["sarnat"] = to_string(*r.sarnat);
    if (r.trigger) j["trigger"] = to_string(*r.trigger);
    if (r.split) j["split"] = to_string(*r.split);
    out += j.dump() + "\n";
  }
  return out;
}

void save_manifest(const Manifest& m, const std::string& path) {
  write_text_file(path, format_manifest(m));
}

Manifest patient_disjoint_split(const Manifest& manifest, SplitFractions f, std::uint64_t seed) {
  if (!(f.train > 0 && f.val > 0 && f.test > 0))
    throw ValidationError("split fractions must be positive");
  if (std::abs(f.train + f.val + f.test - 1.0) > 1e-9)
    throw ValidationError("split fractions must sum to 1");
  auto patients = manifest.patients();
  const auto p = static_cast<long>(patients.size());
  if (p < 3)
    throw ValidationError("patient_disjoint_split needs at least 3 patients, got " +
                          std::to_string(p));

  Rng rng(seed);
  std::shuffle(patients.begin(), patients.end(), rng);

  long n_val = std::max(1L, std::lround(f.val * static_cast<double>(p)));
  long n_test = std::max(1L, std::lround(f.test * static_cast<double>(p)));
  while (p - n_val - n_test < 1) {
    if (n_val >= n_test && n_val > 1) --n_val;
    else --n_test;
  }
  std::map<std::string, Split> assignment;
  for (long i = 0; i < p; ++i) {
    Split s = i < n_val ? Split::kVal : (i < n_val + n_test ? Split::kTest : Split::kTrain);
    assignment[patients[static_cast<std::size_t>(i)]] = s;
  }
  Manifest out = manifest;
  for (auto& r : out.records) r.split = assignment.at(r.patient_id);
  return out;
}

Manifest labelled_patient_split(const Manifest& manifest, const TaskSpec& task,
                                SplitFractions fractions, std::uint64_t seed) {
  std::set<std::string> labelled;
  for (const auto& r : manifest.records)
    if (task.label(r)) labelled.insert(r.patient_id);
  Manifest part = manifest;
  std::erase_if(part.records, [&](const RecordingMeta& r) { return !labelled.count(r.patient_id); });
  std::map<std::string, Split> assignment;
  for (const auto& r : patient_disjoint_split(part, fractions, seed).records)
    assignment[r.patient_id] = *r.split;
  Manifest out = manifest;
  for (auto& r : out.records) {
    auto it = assignment.find(r.patient_id);
    r.split = it == assignment.end() ? Split::kTrain : it->second;
  }
  return out;
}

std::vector<std::string> subset_sample(const Manifest& manifest, const TaskSpec& task,
                                       double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ValidationError("subset fraction must lie in (0, 1]");
  const int k = task.num_classes();

  struct Item {
    std::size_t index;
    int label;
  };
  std::vector<Item> labelled;
  std::map<std::string, std::vector<std::size_t>> by_patient;  // positions in `labelled`
  std::vector<int> class_count(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    if (r.split != Split::kTrain) continue;
    auto y = task.label(r);
    if (!y) continue;
    by_patient[r.patient_id].push_back(labelled.size());
    labelled.push_back({i, *y});
    ++class_count[static_cast<std::size_t>(*y)];
  }
  for (int c = 0; c < k; ++c)
    if (class_count[static_cast<std::size_t>(c)] == 0)
      throw ValidationError("class '" + task.classes[static_cast<std::size_t>(c)] +
                            "' has no labelled train recordings");

  const auto n = static_cast<long>(labelled.size());
  const long target = std::max(1L, std::lround(fraction * static_cast<double>(n)));
  if (target < k)
    throw ValidationError("subset fraction " + std::to_string(fraction) + " selects " +
                          std::to_string(target) + " of " + std::to_string(n) +
                          " recordings; at least one per class (" + std::to_string(k) +
                          ") is required");

  std::vector<std::string> order;
  for (const auto& [pid, _] : by_patient) order.push_back(pid);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<bool> chosen(labelled.size(), false);
  std::vector<bool> class_seen(static_cast<std::size_t>(k), false);
  std::set<std::string> used;
  long remaining = target;
  auto take = [&](std::size_t pos) {
    if (chosen[pos]) return;
    chosen[pos] = true;
    class_seen[static_cast<std::size_t>(labelled[pos].label)] = true;
    --remaining;
  };
  auto unmet = [&] {
    return std::count(class_seen.begin(), class_seen.end(), false);
  };

  // Class floor: one patient per missing class, whole if the budget allows.
  for (int c = 0; c < k; ++c) {
    if (class_seen[static_cast<std::size_t>(c)]) continue;
    for (const auto& pid : order) {
      const auto& items = by_patient[pid];
      auto hit = std::find_if(items.begin(), items.end(),
                              [&](std::size_t pos) { return labelled[pos].label == c; });
      if (hit == items.end()) continue;
      const long reserve = unmet() - 1;  // other classes still to cover
      if (static_cast<long>(items.size()) <= remaining - reserve && !used.count(pid)) {
        for (auto pos : items) take(pos);
      } else {
        take(*hit);
      }
      used.insert(pid);
      break;
    }
  }
  // Whole patients while they fit.
  for (const auto& pid : order) {
    if (remaining <= 0) break;
    if (used.count(pid)) continue;
    const auto& items = by_patient[pid];
    if (static_cast<long>(items.size()) <= remaining) {
      for (auto pos : items) take(pos);
      used.insert(pid);
    }
  }
  // Fill any gap with single recordings.
  for (const auto& pid : order) {
    for (auto pos : by_patient[pid]) {
      if (remaining <= 0) break;
      take(pos);
    }
  }

  std::vector<std::size_t> picked;
  for (std::size_t pos = 0; pos < labelled.size(); ++pos)
    if (chosen[pos]) picked.push_back(labelled[pos].index);
  std::sort(picked.begin(), picked.end());
  std::vector<std::string> ids;
  for (auto i : picked) ids.push_back(manifest.records[i].recording_id);
  return ids;
}

std::vector<double> class_weights(std::span<const int> labels, int num_classes) {
  if (num_classes < 1) throw ValidationError("num_classes must be positive");
  std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes)
      throw ValidationError("label " + std::to_string(y) + " out of range");
    counts[static_cast<std::size_t>(y)] += 1.0;
  }
  const double n = static_cast<double>(labels.size());
  std::vector<double> w(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0.0)
      throw ValidationError("class " + std::to_string(c) + " has no samples");
    w[c] = n / (static_cast<double>(num_classes) * counts[c]);
  }
  return w;
}

WeightedSampler::WeightedSampler(std::span<const int> labels, int num_classes)
    : class_weights_(cryssl::class_weights(labels, num_classes)) {
  double acc = 0.0;
  cumulative_.reserve(labels.size());
  for (int y : labels) {
    acc += class_weights_[static_cast<std::size_t>(y)];
    cumulative_.push_back(acc);
  }
}

std::size_t WeightedSampler::draw(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, cumulative_.back());
  const double x = u(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
  if (it == cumulative_.end()) --it;
  return static_cast<std::size_t>(it - cumulative_.begin());
}

}  // namespace cryssl
