//
// Copyright 2026 The dpfed Authors
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
//

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpfed/config.h"
#include "dpfed/experiment.h"
#include "dpfed/fedopt.h"
#include "dpfed/sharding.h"
#include "dpfed/verify.h"

namespace dpfed {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool passed = false;
  std::string detail;
};

class Reporter {
 public:
  void Run(int id, const std::string& name,
           const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    const Outcome o = body();
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (!o.passed) ++failures_;
    std::printf("%s %2d %s (%.1fs): %s\n", o.passed ? "PASS" : "FAIL", id,
                name.c_str(), seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

Outcome FromCheck(const CheckResult& r) { return {r.passed, r.detail}; }

Outcome Error(const absl::Status& status) {
  return {false, std::string(status.ToString())};
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct QuadCase {
  const char* config;
  const char* label;
  double clip_scale;
  double eta;
};

constexpr QuadCase kQuadCases[] = {
    {"quad_i1.cfg", "I1", 40, 0.003},  {"quad_i1.cfg", "I1", 50, 0.003},
    {"quad_i1.cfg", "I1", 100, 0.001}, {"quad_i2.cfg", "I2", 40, 0.003},
    {"quad_i2.cfg", "I2", 50, 0.003},  {"quad_i2.cfg", "I2", 100, 0.001},
};

absl::StatusOr<ExperimentPlan> QuadPlan(const QuadCase& c, int threads,
                                        const std::string& out) {
  auto config =
      ReadConfigFile(absl::StrCat(DPFED_SOURCE_DIR, "/configs/", c.config));
  if (!config.ok()) return config.status();
  config->Set("C", absl::StrCat(c.clip_scale));
  config->Set("eta0", absl::StrCat(c.eta));
  config->Set("trajectory", "false");
  config->Set("threads", absl::StrCat(threads));
  config->Set("out", out);
  return BuildPlan(*config);
}

int Main() {
  Reporter report;
  const fs::path scratch = fs::temp_directory_path() / "dpfed_acceptance";
  fs::remove_all(scratch);

  const auto built = BuildSuite(SuiteSpec{});
  if (!built.ok()) {
    std::printf("FAIL suite construction: %s\n",
                built.status().ToString().c_str());
    return 1;
  }

  report.Run(1, "sensitivity operators",
             [] { return FromCheck(CheckSensitivityOperators(0, 100000)); });
  report.Run(2, "noise calibration",
             [] { return FromCheck(CheckNoiseCalibration(0)); });
  report.Run(3, "geometric-sum grid",
             [] { return FromCheck(CheckGeometricSumGrid()); });
  report.Run(4, "local-update lemmas",
             [&] { return FromCheck(CheckLemmas(*built, 0, 100)); });
  report.Run(5, "reduction to gradient descent",
             [] { return FromCheck(CheckReductionToGradientDescent()); });

  report.Run(6, "clip and normalize agree below the smallest update", [&] {
    auto config = ReadConfigFile(DPFED_SOURCE_DIR "/configs/quad_i1.cfg");
    if (!config.ok()) return Error(config.status());
    config->Set("K", "100");
    config->Set("C", "10");
    config->Set("eta0", "0.003");
    config->Set("seeds", "1");
    auto plan = BuildPlan(*config);
    if (!plan.ok()) return Error(plan.status());
    std::vector<IterateTrace> traces;
    for (Algorithm a : {Algorithm::kDPFedAvgClip, Algorithm::kDPNormFedAvg}) {
      auto run = MakeRunConfig(*plan, *built, a, 1, std::nullopt);
      if (!run.ok()) return Error(run.status());
      run->record_iterates = true;
      auto trace = RunFederated(built->suite, *run);
      if (!trace.ok()) return Error(trace.status());
      traces.push_back(*std::move(trace));
    }
    double smallest = INFINITY;
    for (const auto& r : traces[0].records) {
      smallest = std::min(smallest, r.u_min);
    }
    double diff = 0.0;
    for (size_t k = 0; k < traces[0].iterates.size(); ++k) {
      diff = std::max(diff, (traces[0].iterates[k] - traces[1].iterates[k])
                                .cwiseAbs()
                                .maxCoeff());
    }
    const bool below = plan->clip_scale <= smallest;
    return Outcome{
        below && diff <= 1e-12,
        absl::StrFormat("C=%g, smallest ||u||=%.3f, max |diff|=%g "
                        "over %d iterates",
                        plan->clip_scale, smallest, diff,
                        static_cast<int>(traces[0].iterates.size()))};
  });

  std::vector<PlanOutcome> quad_runs;
  std::vector<std::string> quad_dirs;
  std::string quad_error;
  const auto quad_start = std::chrono::steady_clock::now();
  for (const QuadCase& c : kQuadCases) {
    const std::string dir =
        (scratch / absl::StrCat("t1_", c.label, "_C", c.clip_scale)).string();
    auto plan = QuadPlan(c, 1, dir);
    absl::StatusOr<PlanOutcome> outcome =
        plan.ok() ? ExecutePlan(*plan, *built, {true, false}) : plan.status();
    if (!outcome.ok()) {
      quad_error = outcome.status().ToString();
      break;
    }
    quad_runs.push_back(*std::move(outcome));
    quad_dirs.push_back(dir);
  }
  const double quad_seconds = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - quad_start)
                                  .count();

  report.Run(7, "normalization beats clipping at C in {50, 100}", [&] {
    if (!quad_error.empty()) return Outcome{false, quad_error};
    bool ok = true;
    std::string detail = absl::StrFormat("runs %.0fs;", quad_seconds);
    for (size_t i = 0; i < quad_runs.size(); ++i) {
      const QuadCase& c = kQuadCases[i];
      const double clip =
          quad_runs[i].MeanFinalSuboptimality(Algorithm::kDPFedAvgClip);
      const double norm =
          quad_runs[i].MeanFinalSuboptimality(Algorithm::kDPNormFedAvg);
      bool pass;
      if (c.clip_scale == 40) {
        pass = std::abs(norm - clip) <= 0.1 * std::max(norm, clip);
      } else {
        pass = norm < clip;
      }
      ok = ok && pass;
      absl::StrAppendFormat(&detail, " %s C=%g clip %.4f norm %.4f%s", c.label,
                            c.clip_scale, clip, norm, pass ? "" : " (!)");
    }
    return Outcome{ok, detail};
  });

  report.Run(8, "aggregated SNR of normalization dominates", [&] {
    if (!quad_error.empty()) return Outcome{false, quad_error};
    bool ok = true;
    std::string detail;
    for (size_t i = 0; i < quad_runs.size(); ++i) {
      const QuadCase& c = kQuadCases[i];
      if (c.clip_scale == 40) continue;
      int64_t rounds = 0, dominated = 0;
      for (uint64_t seed : {1, 2, 3}) {
        const RunOutcome* clip =
            quad_runs[i].Find(Algorithm::kDPFedAvgClip, seed);
        const RunOutcome* norm =
            quad_runs[i].Find(Algorithm::kDPNormFedAvg, seed);
        if (clip == nullptr || norm == nullptr) {
          return Outcome{false, "missing run"};
        }
        for (size_t k = 0; k < clip->trace.records.size(); ++k) {
          ++rounds;
          if (norm->trace.records[k].snr >= clip->trace.records[k].snr) {
            ++dominated;
          }
        }
      }
      const double share =
          static_cast<double>(dominated) / static_cast<double>(rounds);
      ok = ok && share >= 0.95;
      absl::StrAppendFormat(&detail, " %s C=%g %.1f%%", c.label, c.clip_scale,
                            100.0 * share);
    }
    return Outcome{ok, detail};
  });

  report.Run(9, "theorem-mode bounds hold", [&] {
    auto plan = LoadPlan(DPFED_SOURCE_DIR "/configs/theorem_mode.cfg");
    if (!plan.ok()) return Error(plan.status());
    auto outcome = ExecutePlan(*plan, *built, {false, false});
    if (!outcome.ok()) return Error(outcome.status());
    bool ok = true;
    std::string detail =
        absl::StrFormat("eta=%.5f K=%d", outcome->theorem->schedule.eta,
                        static_cast<int>(outcome->theorem->schedule.rounds));
    for (Algorithm a : plan->variants) {
      double lhs = 0.0, rhs = 0.0, rhs_indicator = 0.0;
      bool each = true;
      for (uint64_t seed : plan->seeds) {
        const RunOutcome* run = outcome->Find(a, seed);
        if (run == nullptr || !run->bounds.has_value()) {
          return Outcome{false, "missing bound report"};
        }
        lhs += run->bounds->lhs;
        rhs += run->bounds->rhs;
        rhs_indicator += run->bounds->rhs_indicator;
        each = each && run->bounds->lhs <= run->bounds->rhs_indicator;
      }
      const double s = static_cast<double>(plan->seeds.size());
      ok = ok && each && lhs <= rhs_indicator && lhs <= rhs;
      absl::StrAppendFormat(&detail, "; %s lhs %.3f rhs %.3f (indicator %.3f)",
                            std::string(VariantName(a)), lhs / s, rhs / s,
                            rhs_indicator / s);
    }
    return Outcome{ok, detail};
  });

  report.Run(10, "desk-scale logistic regression", [&] {
    auto plan = LoadPlan(DPFED_SOURCE_DIR "/configs/logistic.cfg");
    if (!plan.ok()) return Error(plan.status());
    auto logistic = BuildSuite(plan->suite);
    if (!logistic.ok()) return Error(logistic.status());
    int max_classes = 0;
    for (const auto& indices : logistic->shards->client_to_sample_indices) {
      max_classes = std::max(max_classes,
                             DistinctClasses(logistic->data->labels, indices));
    }
    auto outcome = ExecutePlan(*plan, *logistic, {false, false});
    if (!outcome.ok()) return Error(outcome.status());
    const double central = *logistic->stats.centralized_accuracy;
    const RunOutcome* fedavg =
        outcome->Find(Algorithm::kFedAvg, plan->seeds.front());
    const RunOutcome* clip =
        outcome->Find(Algorithm::kDPFedAvgClip, plan->seeds.front());
    const RunOutcome* norm =
        outcome->Find(Algorithm::kDPNormFedAvg, plan->seeds.front());
    if (!fedavg || !clip || !norm) return Outcome{false, "missing run"};
    const double acc = *fedavg->final_accuracy;
    const bool ok =
        max_classes <= plan->suite.shards_per_client && acc >= 0.9 * central;
    return Outcome{
        ok, absl::StrFormat("max classes per client %d over %d clients; "
                            "centralized %.3f fedavg %.3f clip %.3f norm %.3f",
                            max_classes,
                            static_cast<int>(logistic->suite.size()), central,
                            acc, *clip->final_accuracy, *norm->final_accuracy)};
  });

  report.Run(11, "byte-identical reruns across thread counts", [&] {
    if (!quad_error.empty()) return Outcome{false, quad_error};
    int compared = 0;
    for (size_t i = 0; i < quad_dirs.size(); ++i) {
      const std::string dir = (scratch / absl::StrCat("t2_", i)).string();
      auto plan = QuadPlan(kQuadCases[i], 2, dir);
      if (!plan.ok()) return Error(plan.status());
      auto outcome = ExecutePlan(*plan, *built, {true, false});
      if (!outcome.ok()) return Error(outcome.status());
      for (const auto& entry : fs::directory_iterator(quad_dirs[i])) {
        if (entry.path().extension() != ".csv") continue;
        const std::string first = Slurp(entry.path());
        const std::string second =
            Slurp(fs::path(dir) / entry.path().filename());
        if (first.empty() || first != second) {
          return Outcome{false,
                         absl::StrCat("differs: ", entry.path().string())};
        }
        ++compared;
      }
    }
    return Outcome{compared == 36, absl::StrCat(compared,
                                                " CSV files identical, 1 vs 2 "
                                                "threads")};
  });

  fs::remove_all(scratch);
  std::printf("%d of 11 criteria failed\n", report.failures());
  return report.failures() == 0 ? 0 : 1;
}

}  // namespace
}  // namespace dpfed

int main() { return dpfed::Main(); }
