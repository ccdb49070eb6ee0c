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

#include "cryssl/evaluation.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "cryssl/config.hpp"
#include "cryssl/error.hpp"
#include "cryssl/metrics.hpp"

namespace cryssl {

void ScoreSet::validate() const {
  if (num_classes < 2) throw ValidationError("scores: need at least 2 classes");
  if (scores.size() != labels.size() * static_cast<std::size_t>(num_classes))
    throw ValidationError("scores: shape mismatch");
  for (double s : scores)
    if (!std::isfinite(s)) throw ValidationError("scores: non-finite entry");
  for (int y : labels)
    if (y < 0 || y >= num_classes) throw ValidationError("scores: label out of range");
}

double ScoreSet::macro_auc() const {
  validate();
  return macro_ovr_auc(scores, labels, num_classes);
}

EvalReport summarize(std::vector<RunOutcome> runs) {
  if (runs.empty()) throw ValidationError("report: no runs");
  EvalReport r;
  std::vector<double> aucs;
  for (const auto& o : runs)
    if (o.ok) aucs.push_back(o.auc);
  r.runs = std::move(runs);
  r.completed = aucs.size();
  if (!aucs.empty()) r.mean = mean_of(aucs);
  if (aucs.size() >= 2) r.stderr_auc = sample_stddev(aucs) / std::sqrt(static_cast<double>(aucs.size()));
  return r;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json runs_j = nlohmann::json::array();
  for (const auto& o : runs) {
    nlohmann::json j{{"seed", o.seed}, {"ok", o.ok}};
    if (o.ok) j["auc"] = o.auc;
    else j["error"] = o.error;
    runs_j.push_back(j);
  }
  nlohmann::json j{{"task", task},          {"strategy", strategy},
                   {"config_hash", config_hash}, {"repeats", runs.size()},
                   {"completed", completed}, {"runs", runs_j}};
  j["mean_auc"] = completed ? nlohmann::json(mean) : nlohmann::json(nullptr);
  j["stderr_auc"] = stderr_auc ? nlohmann::json(*stderr_auc) : nlohmann::json(nullptr);
  return j;
}

std::string EvalReport::table() const {
  std::string s = fmt::format("task {}  strategy {}  config {}\n", task, strategy, config_hash);
  s += fmt::format("{:>4}  {:>20}  {:>8}\n", "run", "seed", "auc");
  for (std::size_t i = 0; i < runs.size(); ++i)
    s += runs[i].ok ? fmt::format("{:>4}  {:>20}  {:>8.4f}\n", i, runs[i].seed, runs[i].auc)
                    : fmt::format("{:>4}  {:>20}  {:>8}  {}\n", i, runs[i].seed, "failed", runs[i].error);
  s += fmt::format("completed {}/{}  mean {:.4f}", completed, runs.size(), mean);
  s += stderr_auc ? fmt::format("  stderr {:.4f}\n", *stderr_auc) : std::string("  stderr n/a\n");
  return s;
}

EvalReport repeat_eval(const std::function<double(std::uint64_t)>& run, int repeats,
                       std::uint64_t base_seed) {
  if (repeats < 1) throw ValidationError("repeat_eval: repeats must be >= 1");
  std::vector<RunOutcome> out;
  for (int i = 0; i < repeats; ++i) {
    RunOutcome o;
    o.seed = derive_seed(base_seed, "repeat/" + std::to_string(i));
    try {
      o.auc = run(o.seed);
      o.ok = true;
    } catch (const Error& e) {
      o.error = e.what();
      spdlog::warn("repeat {} (seed {}) failed: {}", i, o.seed, e.what());
    }
    out.push_back(std::move(o));
  }
  return summarize(std::move(out));
}

ScoreSet test_scores(const Checkpoint& finetuned, const TaskSpec& task, const Manifest& data,
                     AudioLibrary& audio) {
  ScoreSet s;
  s.task = std::string(task.name_str());
  s.num_classes = task.num_classes();
  std::vector<RecordingMeta> recs;
  for (const auto& r : data.with_split(Split::kTest))
    if (auto y = task.label(r)) {
      recs.push_back(r);
      s.labels.push_back(*y);
    }
  if (recs.empty()) throw ValidationError("evaluate: no labelled test recordings");
  if (finetuned.head_classes != s.num_classes)
    throw ValidationError("evaluate: checkpoint head has " + std::to_string(finetuned.head_classes) +
                          " classes, task needs " + std::to_string(s.num_classes));
  s.scores = predict_proba(finetuned, data, recs, audio);
  return s;
}

double train_and_test(const TrainingJob& job, std::uint64_t seed, AudioLibrary& audio) {
  if (!job.model || !job.data) throw ValidationError("evaluate: incomplete training job");
  const auto run = train_supervised(*job.model, job.task, *job.data, job.strategy, seed, audio,
                                    job.options);
  return test_scores(run.checkpoint, job.task, *job.data, audio).macro_auc();
}

EvalReport repeat_eval(const TrainingJob& job, int repeats, std::uint64_t base_seed,
                       AudioLibrary& audio) {
  auto r = repeat_eval([&](std::uint64_t s) { return train_and_test(job, s, audio); }, repeats,
                       base_seed);
  r.task = std::string(job.task.name_str());
  r.strategy = std::string(to_string(job.strategy.kind));
  r.config_hash = config_hash(nlohmann::json{{"strategy", job.strategy},
                                             {"tap", to_string(job.options.tap)},
                                             {"model", job.model ? job.model->config_hashes : decltype(job.model->config_hashes){}},
                                             {"repeats", repeats},
                                             {"seed", base_seed}});
  return r;
}

void SweepConfig::validate() const {
  if (fractions.empty()) throw ConfigError("sweep: empty fraction list");
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("sweep: fractions must lie in (0, 1]");
  if (seeds < 1) throw ConfigError("sweep: seeds must be >= 1");
  for (const auto& s : strategies) s.validate();
}

const SweepCell* SweepResult::find(std::string_view variant, std::string_view strategy,
                                   double fraction) const {
  for (const auto& c : cells)
    if (c.variant == variant && c.strategy == strategy && std::abs(c.fraction - fraction) < 1e-12)
      return &c;
  return nullptr;
}

nlohmann::json SweepResult::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array(), cells_j = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j{{"variant", r.variant},   {"strategy", r.strategy},
                     {"fraction", r.fraction}, {"seed", r.seed},
                     {"train_size", r.train_size}, {"ok", r.outcome.ok}};
    if (r.outcome.ok) j["auc"] = r.outcome.auc;
    else j["error"] = r.outcome.error;
    rows_j.push_back(j);
  }
  for (const auto& c : cells) {
    auto j = c.report.to_json();
    j["variant"] = c.variant;
    j["fraction"] = c.fraction;
    cells_j.push_back(j);
  }
  return {{"rows", rows_j}, {"cells", cells_j}};
}

std::string SweepResult::table() const {
  std::string s = fmt::format("{:<16} {:<12} {:>8} {:>5} {:>8} {:>8}\n", "variant", "strategy",
                              "fraction", "runs", "mean", "stderr");
  for (const auto& c : cells)
    s += fmt::format("{:<16} {:<12} {:>8.3f} {:>5} {:>8.4f} {:>8}\n", c.variant, c.strategy,
                     c.fraction, c.report.completed, c.report.mean,
                     c.report.stderr_auc ? fmt::format("{:.4f}", *c.report.stderr_auc) : "n/a");
  return s;
}

SweepResult subset_sweep(const std::vector<SweepVariant>& variants, const TaskSpec& task,
                         const Manifest& data, const SweepConfig& cfg_in, AudioLibrary& audio) {
  SweepConfig cfg = cfg_in;
  if (cfg.strategies.empty()) {
    FineTuneStrategy lbn;
    lbn.kind = StrategyKind::kLinearBn;
    FineTuneStrategy e2e;
    e2e.kind = StrategyKind::kEndToEnd;
    cfg.strategies = {lbn, e2e};
  }
  cfg.validate();
  if (variants.empty()) throw ValidationError("sweep: no model variants");

  SweepResult out;
  for (const auto& v : variants) {
    if (!v.model) throw ValidationError("sweep: variant '" + v.name + "' has no checkpoint");
    for (const auto& strat : cfg.strategies) {
      const std::string sname(to_string(strat.kind));
      for (double f : cfg.fractions) {
        std::vector<RunOutcome> outcomes;
        for (int s = 0; s < cfg.seeds; ++s) {
          const auto tag = fmt::format("{}/{}", f, s);
          const auto subset_seed = derive_seed(cfg.seed, "subset/" + tag);
          const auto train_seed = derive_seed(cfg.seed, "train/" + sname + "/" + tag);
          SweepRow row{v.name, sname, f, train_seed, 0, {}};
          row.outcome.seed = train_seed;
          try {
            FineTuneOptions opts;
            opts.tap = cfg.tap;
            opts.train_subset = subset_sample(data, task, f, subset_seed);
            row.train_size = opts.train_subset->size();
            const auto run = train_supervised(*v.model, task, data, strat, train_seed, audio, opts);
            row.outcome.auc = test_scores(run.checkpoint, task, data, audio).macro_auc();
            row.outcome.ok = true;
          } catch (const Error& e) {
            row.outcome.error = e.what();
            spdlog::warn("sweep {} {} f={} seed {} failed: {}", v.name, sname, f, s, e.what());
          }
          spdlog::info("sweep {} {} f={} seed {}: n={} auc={}", v.name, sname, f, s, row.train_size,
                       row.outcome.ok ? fmt::format("{:.4f}", row.outcome.auc) : "failed");
          outcomes.push_back(row.outcome);
          out.rows.push_back(std::move(row));
        }
        SweepCell cell{v.name, sname, f, summarize(std::move(outcomes))};
        cell.report.task = std::string(task.name_str());
        cell.report.strategy = sname;
        cell.report.config_hash = config_hash(nlohmann::json{
            {"strategy", strat}, {"fraction", f}, {"seeds", cfg.seeds}, {"seed", cfg.seed},
            {"model", v.model->config_hashes}});
        out.cells.push_back(std::move(cell));
      }
    }
  }
  return out;
}

std::string sweep_plot_svg(const SweepResult& sweep) {
  const double w = 640, h = 420, ml = 60, mr = 170, mt = 20, mb = 50;
  double fmin = 1.0, fmax = 1.0, amin = 1.0, amax = 0.0;
  for (const auto& c : sweep.cells) {
    fmin = std::min(fmin, c.fraction);
    fmax = std::max(fmax, c.fraction);
    const double se = c.report.stderr_auc.value_or(0.0);
    if (c.report.completed) {
      amin = std::min(amin, c.report.mean - se);
      amax = std::max(amax, c.report.mean + se);
    }
  }
  if (amax < amin) amin = 0.0, amax = 1.0;
  amin = std::max(0.0, std::floor(amin * 10.0) / 10.0);
  amax = std::min(1.0, std::ceil(amax * 10.0) / 10.0);
  if (amax - amin < 0.1) amax = std::min(1.0, amin + 0.1), amin = amax - 0.1;
  const double lx0 = std::log10(fmin), lx1 = std::max(std::log10(fmax), lx0 + 1e-9);
  auto px = [&](double f) { return ml + (std::log10(f) - lx0) / (lx1 - lx0) * (w - ml - mr); };
  auto py = [&](double a) { return mt + (amax - a) / (amax - amin) * (h - mt - mb); };

  std::ostringstream o;
  o << fmt::format(R"svg(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">)svg", w, h) << "\n";
  o << fmt::format(R"svg(<rect width="{}" height="{}" fill="white"/>)svg", w, h) << "\n";
  o << fmt::format(R"svg(<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/>)svg", ml, h - mb, w - mr) << "\n";
  o << fmt::format(R"svg(<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/>)svg", ml, mt, h - mb) << "\n";
  std::vector<double> ticks;
  for (const auto& c : sweep.cells)
    if (std::find(ticks.begin(), ticks.end(), c.fraction) == ticks.end()) ticks.push_back(c.fraction);
  for (double f : ticks)
    o << fmt::format(R"svg(<text x="{:.1f}" y="{}" text-anchor="middle">{:g}</text>)svg", px(f), h - mb + 16, f) << "\n";
  for (int i = 0; i <= 4; ++i) {
    const double a = amin + (amax - amin) * i / 4.0;
    o << fmt::format(R"svg(<text x="{}" y="{:.1f}" text-anchor="end">{:.2f}</text>)svg", ml - 6, py(a) + 4, a) << "\n";
  }
  o << fmt::format(R"svg(<text x="{:.1f}" y="{}" text-anchor="middle">fraction of labelled training data</text>)svg", (ml + w - mr) / 2, h - 12) << "\n";
  o << fmt::format(R"svg(<text x="14" y="{:.1f}" transform="rotate(-90 14 {:.1f})" text-anchor="middle">test AUC</text>)svg", (mt + h - mb) / 2, (mt + h - mb) / 2) << "\n";

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::map<std::string, std::vector<const SweepCell*>> curves;
  std::vector<std::string> order;
  for (const auto& c : sweep.cells) {
    const auto key = c.variant + " / " + c.strategy;
    if (!curves.count(key)) order.push_back(key);
    if (c.report.completed) curves[key].push_back(&c);
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto pts = curves[order[k]];
    std::sort(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->fraction < b->fraction; });
    const char* col = palette[k % 6];
    if (!pts.empty()) {
      std::string band, line;
      for (auto* c : pts) band += fmt::format("{:.1f},{:.1f} ", px(c->fraction), py(c->report.mean + c->report.stderr_auc.value_or(0.0)));
      for (auto it = pts.rbegin(); it != pts.rend(); ++it)
        band += fmt::format("{:.1f},{:.1f} ", px((*it)->fraction), py((*it)->report.mean - (*it)->report.stderr_auc.value_or(0.0)));
      for (auto* c : pts) line += fmt::format("{:.1f},{:.1f} ", px(c->fraction), py(c->report.mean));
      o << fmt::format(R"svg(<polygon points="{}" fill="{}" fill-opacity="0.15" stroke="none"/>)svg", band, col) << "\n";
      o << fmt::format(R"svg(<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>)svg", line, col) << "\n";
      for (auto* c : pts)
        o << fmt::format(R"svg(<circle cx="{:.1f}" cy="{:.1f}" r="3" fill="{}"/>)svg", px(c->fraction), py(c->report.mean), col) << "\n";
    }
    const double ly = mt + 14 + 18 * static_cast<double>(k);
    o << fmt::format(R"svg(<line x1="{}" y1="{:.1f}" x2="{}" y2="{:.1f}" stroke="{}" stroke-width="2"/>)svg", w - mr + 10, ly, w - mr + 30, ly, col) << "\n";
    o << fmt::format(R"svg(<text x="{}" y="{:.1f}">{}</text>)svg", w - mr + 36, ly + 4, order[k]) << "\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace cryssl
