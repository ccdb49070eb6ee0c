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
#include <random>
#include <set>

#include "cryssl/error.hpp"
#include "cryssl/evaluation.hpp"
#include "cryssl/synth.hpp"

using namespace cryssl;

TEST_CASE("summary statistics over completed runs") {
  std::vector<RunOutcome> runs{{1, true, 0.7, ""}, {2, true, 0.9, ""}, {3, false, 0.0, "boom"},
                               {4, true, 0.8, ""}};
  auto r = summarize(runs);
  CHECK(r.completed == 3);
  CHECK(r.runs.size() == 4);
  CHECK(r.mean == doctest::Approx(0.8));
  REQUIRE(r.stderr_auc.has_value());
  CHECK(*r.stderr_auc == doctest::Approx(0.1 / std::sqrt(3.0)));

  auto j = r.to_json();
  CHECK(j["repeats"] == 4);
  CHECK(j["completed"] == 3);
  CHECK(j["runs"][2]["error"] == "boom");
  CHECK(j["mean_auc"].get<double>() == doctest::Approx(0.8));

  auto single = summarize({{1, true, 0.6, ""}});
  CHECK_FALSE(single.stderr_auc.has_value());
  CHECK(single.to_json()["stderr_auc"].is_null());
  CHECK(single.table().find("n/a") != std::string::npos);
  CHECK_THROWS_AS(summarize({}), ValidationError);
}

TEST_CASE("repeat_eval derives distinct seeds and records failures") {
  std::set<std::uint64_t> seen;
  int calls = 0;
  auto r = repeat_eval(
      [&](std::uint64_t s) {
        seen.insert(s);
        if (++calls == 2) throw ValidationError("no test recordings");
        return 0.5 + 0.1 * calls;
      },
      4, 99);
  CHECK(seen.size() == 4);
  CHECK(r.completed == 3);
  CHECK_FALSE(r.runs[1].ok);
  CHECK(r.runs[1].error.find("no test recordings") != std::string::npos);
  auto again = repeat_eval([](std::uint64_t s) { return static_cast<double>(s % 7) / 7.0; }, 4, 99);
  for (std::size_t i = 0; i < 4; ++i) CHECK(again.runs[i].seed == r.runs[i].seed);
  CHECK_THROWS_AS(repeat_eval([](std::uint64_t) { return 0.5; }, 0, 1), ValidationError);
}

TEST_CASE("score sets validate their shape") {
  ScoreSet s;
  s.num_classes = 2;
  s.scores = {0.9, 0.1, 0.2, 0.8};
  s.labels = {0, 1};
  CHECK(s.macro_auc() == 1.0);
  s.labels = {0};
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.labels = {0, 2};
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("sweep config validation") {
  SweepConfig c;
  CHECK_NOTHROW(c.validate());
  c.fractions = {0.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.fractions = {};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.seeds = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("subset sweep shares subsets across variants") {
  CrySynthSpec cs;
  cs.patients_per_class = 5;
  cs.recordings_per_patient = 2;
  cs.seed = 8;
  Manifest data = patient_disjoint_split(write_cry_corpus(cs, "eval_corpus"), {0.6, 0.2, 0.2}, 3);
  Encoder<float> a(EncoderConfig::narrow(16), ProjectionHeadConfig::narrow(16));
  a.init(1);
  Encoder<float> b(EncoderConfig::narrow(16), ProjectionHeadConfig::narrow(16));
  b.init(2);
  const auto ca = make_checkpoint(a, kStageInitialized);
  const auto cb = make_checkpoint(b, kStagePretrained);

  SweepConfig cfg;
  cfg.fractions = {0.5, 1.0};
  cfg.seeds = 2;
  FineTuneStrategy s;
  s.kind = StrategyKind::kLinear;
  s.epochs = 1;
  s.batch_size = 4;
  s.head_lr = 1e-2;
  cfg.strategies = {s};
  AudioLibrary audio;
  auto res = subset_sweep({{"a", &ca}, {"b", &cb}}, TaskSpec::neuro_injury(), data, cfg, audio);
  CHECK(res.rows.size() == 2 * 2 * 2);
  CHECK(res.cells.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(res.rows[i].seed == res.rows[i + 4].seed);
    CHECK(res.rows[i].train_size == res.rows[i + 4].train_size);
    CHECK(res.rows[i].outcome.ok);
  }
  const auto* full = res.find("b", "linear", 1.0);
  REQUIRE(full != nullptr);
  CHECK(full->report.completed == 2);
  CHECK(res.find("c", "linear", 1.0) == nullptr);
  CHECK(res.to_json()["cells"].size() == 4);
  const auto svg = sweep_plot_svg(res);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("stderr is the sample deviation over sqrt(R)") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.4, 1.0);
  for (int r = 2; r <= 12; ++r) {
    std::vector<RunOutcome> runs;
    std::vector<double> aucs;
    for (int i = 0; i < r; ++i) {
      aucs.push_back(u(rng));
      runs.push_back({static_cast<std::uint64_t>(i), true, aucs.back(), ""});
    }
    double m = 0.0;
    for (double a : aucs) m += a / r;
    double ss = 0.0;
    for (double a : aucs) ss += (a - m) * (a - m);
    const auto rep = summarize(runs);
    REQUIRE(rep.stderr_auc.has_value());
    CHECK(std::abs(*rep.stderr_auc - std::sqrt(ss / (r - 1)) / std::sqrt(static_cast<double>(r))) < 1e-12);
  }
}
