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

#include <map>
#include <set>

#include "cryssl/catalog.hpp"
#include "cryssl/error.hpp"
#include "test_support.hpp"

using namespace cryssl;
using cryssl::testing::toy_manifest;

TEST_CASE("task schemas") {
  CHECK(TaskSpec::neuro_injury().num_classes() == 2);
  CHECK(TaskSpec::trigger().num_classes() == 3);
  CHECK_THROWS_AS(TaskSpec::by_name("age"), ConfigError);

  RecordingMeta r;
  CHECK_FALSE(collapse_sarnat(r).has_value());
  CHECK_FALSE(trigger_index(r).has_value());
  const int expected[] = {0, 1, 1, 1};
  for (int s = 0; s < 4; ++s) {
    r.sarnat = static_cast<Sarnat>(s);
    CHECK(*collapse_sarnat(r) == expected[s]);
  }
  r.trigger = Trigger::kDiscomfort;
  CHECK(*trigger_index(r) == 2);
}

TEST_CASE("enum names round-trip") {
  for (int s = 0; s < 4; ++s)
    CHECK(parse_sarnat(to_string(static_cast<Sarnat>(s))) == static_cast<Sarnat>(s));
  for (int t = 0; t < 3; ++t)
    CHECK(parse_trigger(to_string(static_cast<Trigger>(t))) == static_cast<Trigger>(t));
  for (int s = 0; s < 3; ++s)
    CHECK(parse_split(to_string(static_cast<Split>(s))) == static_cast<Split>(s));
  CHECK_THROWS_AS(parse_sarnat("grave"), ParseError);
}

TEST_CASE("manifest wire format round-trips") {
  Manifest m = toy_manifest(4, 2);
  m.records[0].sarnat.reset();
  m.records[1].trigger.reset();
  m.records[2].split = Split::kVal;
  Manifest back = parse_manifest(format_manifest(m));
  CHECK(back.source_tag == "toy");
  CHECK(back.records == m.records);
}

TEST_CASE("manifest parsing rejects bad input") {
  CHECK_THROWS_AS(parse_manifest("{not json}\n"), ParseError);
  CHECK_THROWS_AS(parse_manifest(R"({"recording_id":"a","path":"a.wav","duration_s":1})"),
                  ParseError);
  CHECK_THROWS_AS(
      parse_manifest(R"({"recording_id":"a","patient_id":"p","path":"a.wav","duration_s":0})"),
      ValidationError);
  CHECK_THROWS_AS(parse_manifest(R"({"recording_id":"a","patient_id":"p","path":"a.wav","duration_s":1,"sarnat":"x"})"),
                  ParseError);
  const std::string dup =
      R"({"recording_id":"a","patient_id":"p","path":"a.wav","duration_s":1})"
      "\n"
      R"({"recording_id":"a","patient_id":"q","path":"b.wav","duration_s":1})";
  CHECK_THROWS_AS(parse_manifest(dup), ValidationError);
}

TEST_CASE("relative paths resolve against the manifest directory") {
  Manifest m = parse_manifest(R"({"recording_id":"a","patient_id":"p","path":"x/a.wav","duration_s":1})",
                              "/data/corpus");
  CHECK(m.resolve(m.records[0]) == "/data/corpus/x/a.wav");
  m.records[0].path = "/abs/a.wav";
  CHECK(m.resolve(m.records[0]) == "/abs/a.wav");
}

TEST_CASE("patient-disjoint split over many seeds") {
  for (int patients : {3, 7, 40, 61}) {
    Manifest m = toy_manifest(patients, 3);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Manifest s = patient_disjoint_split(m, {0.6, 0.2, 0.2}, seed);
      std::map<std::string, std::set<Split>> seen;
      std::map<Split, int> count;
      for (const auto& r : s.records) {
        REQUIRE(r.split.has_value());
        seen[r.patient_id].insert(*r.split);
      }
      for (const auto& [pid, splits] : seen) {
        CHECK(splits.size() == 1);
        ++count[*splits.begin()];
      }
      CHECK(count.size() == 3);
      if (patients == 40) {
        CHECK(count[Split::kVal] == 8);
        CHECK(count[Split::kTest] == 8);
      }
    }
  }
  CHECK_THROWS_AS(patient_disjoint_split(toy_manifest(2, 1), {}, 0), ValidationError);
  CHECK_THROWS_AS(patient_disjoint_split(toy_manifest(9, 1), {0.5, 0.5, 0.5}, 0), ValidationError);
}

TEST_CASE("split is a pure function of the seed") {
  Manifest m = toy_manifest(20, 2);
  CHECK(patient_disjoint_split(m, {}, 5).records == patient_disjoint_split(m, {}, 5).records);
  CHECK(patient_disjoint_split(m, {}, 5).records != patient_disjoint_split(m, {}, 6).records);
}

TEST_CASE("class weights") {
  std::vector<int> y{0, 0, 0, 1};
  auto w = class_weights(y, 2);
  CHECK(w[0] == doctest::Approx(4.0 / 6.0));
  CHECK(w[1] == doctest::Approx(2.0));
  CHECK_THROWS_AS(class_weights(y, 3), ValidationError);
  std::vector<int> bad{0, 2};
  CHECK_THROWS_AS(class_weights(bad, 2), ValidationError);
}

TEST_CASE("weighted sampler balances a 90/10 corpus") {
  std::vector<int> y(100, 0);
  for (int i = 0; i < 10; ++i) y[static_cast<std::size_t>(i * 10)] = 1;
  WeightedSampler sampler(y, 2);
  Rng rng(3);
  int ones = 0;
  const int draws = 32 * 30;
  for (int i = 0; i < draws; ++i) ones += y[sampler.draw(rng)];
  const double freq = static_cast<double>(ones) / draws;
  CHECK(freq >= 0.45);
  CHECK(freq <= 0.55);
}

TEST_CASE("subset sampling") {
  Manifest m = toy_manifest(24, 2, true);
  const auto task = TaskSpec::neuro_injury();
  for (double f : {0.05, 0.2, 0.5, 1.0}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto ids = subset_sample(m, task, f, seed);
      CHECK(static_cast<long>(ids.size()) == std::max(2L, std::lround(f * 48)));
      std::set<int> classes;
      std::set<std::string> unique(ids.begin(), ids.end());
      CHECK(unique.size() == ids.size());
      for (const auto& r : m.records)
        if (unique.count(r.recording_id)) classes.insert(*collapse_sarnat(r));
      CHECK(classes.size() == 2);
    }
  }
  CHECK(subset_sample(m, task, 0.2, 1) == subset_sample(m, task, 0.2, 1));
  CHECK_THROWS_AS(subset_sample(m, task, 0.0, 1), ValidationError);
  CHECK_THROWS_AS(subset_sample(m, task, 0.01, 1), ValidationError);
}

TEST_CASE("subset sampling prefers whole patients") {
  Manifest m = toy_manifest(10, 2, true);
  auto ids = subset_sample(m, TaskSpec::neuro_injury(), 0.4, 9);
  REQUIRE(ids.size() == 8);
  std::map<std::string, int> per_patient;
  for (const auto& r : m.records)
    if (std::find(ids.begin(), ids.end(), r.recording_id) != ids.end()) ++per_patient[r.patient_id];
  for (const auto& [pid, n] : per_patient) CHECK(n == 2);
}

TEST_CASE("labelled-patient split sends unlabelled patients to train") {
  Manifest m = toy_manifest(20, 2);
  for (auto& r : m.records)
    if (r.patient_id >= "p5" && r.patient_id < "p9") r.sarnat.reset();
  const auto task = TaskSpec::neuro_injury();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Manifest s = labelled_patient_split(m, task, {0.6, 0.2, 0.2}, seed);
    std::map<Split, std::set<std::string>> labelled;
    for (const auto& r : s.records) {
      if (!task.label(r)) CHECK(r.split == Split::kTrain);
      else labelled[*r.split].insert(r.patient_id);
    }
    CHECK(labelled[Split::kVal].size() == 3);
    CHECK(labelled[Split::kTest].size() == 3);
    CHECK(labelled[Split::kTrain].size() == 10);
  }
}
