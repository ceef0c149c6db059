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

// Experiment orchestration: suite construction, (variant x seed) runs,
// metric/summary/bound-report emission and parameter sweeps.

#ifndef DPFED_EXPERIMENT_H_
#define DPFED_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpfed/analysis.h"
#include "dpfed/config.h"
#include "dpfed/fedopt.h"
#include "dpfed/objectives.h"
#include "dpfed/sharding.h"

namespace dpfed {

struct SuiteStats {
  double smoothness = 0.0;
  double f_star = 0.0;
  double max_heterogeneity = 0.0;
  double mean_heterogeneity = 0.0;
  std::optional<double> lambda_estimate;       // quadratic suites
  std::optional<double> centralized_accuracy;  // logistic suites
};

struct BuiltSuite {
  ProblemSuite suite;
  SuiteStats stats;
  // Logistic suites keep the bias-augmented data and the shard deal.
  std::optional<LabeledData> data;
  std::optional<ShardAssignment> shards;
};

// Deterministic in spec.seed. Solves w*, client minima and Delta*.
absl::StatusOr<BuiltSuite> BuildSuite(const SuiteSpec& spec);

// Step size and round count of a theorem-mode plan, with gamma resolved.
struct ResolvedTheorem {
  double alpha = 1.0;
  double gamma = 1.0;
  double rho = 0.0;
  double c_hat = 0.0;
  TheoremSchedule schedule;
};
absl::StatusOr<ResolvedTheorem> ResolveTheorem(const ExperimentPlan& plan,
                                               const BuiltSuite& built);

absl::StatusOr<RunConfig> MakeRunConfig(
    const ExperimentPlan& plan, const BuiltSuite& built, Algorithm algorithm,
    uint64_t seed, const std::optional<ResolvedTheorem>& theorem);

// Empirical left side against the analytic right side of the convex bound
// that matches the run's algorithm.
struct BoundReport {
  Algorithm algorithm = Algorithm::kDPFedAvgClip;
  uint64_t seed = 0;
  BoundInputs inputs;
  double eta = 0.0;
  double term_a = 0.0;
  double het_term = 0.0;
  double het_term_indicator = 0.0;
  double rhs = 0.0;
  double rhs_indicator = 0.0;
  double lhs = 0.0;
  std::optional<double> simplified;  // clipping runs only

  bool holds() const { return lhs <= rhs; }
};

absl::StatusOr<BoundReport> ComputeBoundReport(const ProblemSuite& suite,
                                               const ResolvedTheorem& theorem,
                                               const RunConfig& config,
                                               const IterateTrace& trace);
std::string BoundReportToJson(const BoundReport& report);

struct RunOutcome {
  Algorithm algorithm = Algorithm::kFedAvg;
  uint64_t seed = 0;
  std::string metrics_file;
  IterateTrace trace;
  double final_suboptimality = 0.0;
  double mean_suboptimality = 0.0;
  double private_output_suboptimality = 0.0;
  std::optional<double> final_accuracy;
  std::optional<BoundReport> bounds;
};

struct PlanOutcome {
  SuiteStats stats;
  std::optional<double> rho;
  std::optional<ResolvedTheorem> theorem;
  std::vector<RunOutcome> runs;
  std::vector<std::string> files;  // written, relative to the output dir

  const RunOutcome* Find(Algorithm algorithm, uint64_t seed) const;
  // Mean over seeds of the final suboptimality of one variant.
  double MeanFinalSuboptimality(Algorithm algorithm) const;
};

struct RunOptions {
  bool write_outputs = true;
  // Drops recorded iterates after outputs are written.
  bool keep_iterates = true;
};

// Runs every (variant, seed) pair on `built`. When writing, emits
// <variant>_<seed>.csv, summary.json and the optional trace, bound and
// trajectory files; all of them are removed again if any run fails.
absl::StatusOr<PlanOutcome> ExecutePlan(const ExperimentPlan& plan,
                                        const BuiltSuite& built,
                                        const RunOptions& options = {});
absl::StatusOr<PlanOutcome> RunPlan(const ExperimentPlan& plan,
                                    const RunOptions& options = {});

// 0 ok, 2 diverged run, 3 configuration error, 1 anything else.
int ExitCodeFor(const absl::Status& status);

// Trace files hold the iterates and per-client update norms of one run.
std::string TraceToJson(const IterateTrace& trace, Algorithm algorithm,
                        uint64_t seed);
struct TraceFile {
  Algorithm algorithm = Algorithm::kFedAvg;
  uint64_t seed = 0;
  IterateTrace trace;
};
absl::StatusOr<TraceFile> ParseTraceJson(const std::string& text);

// Recomputes the bound report of a stored trace under `plan`.
absl::StatusOr<BoundReport> BoundsFromTrace(const ExperimentPlan& plan,
                                            const TraceFile& trace);

// Grid axes in file order: `key = v1, v2, ...`. Each combination overrides
// the base config and writes to <out>/<key>=<value>[_<key>=<value>...].
struct SweepGrid {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
};
absl::StatusOr<SweepGrid> ParseSweepGrid(std::string_view text);
absl::Status RunSweep(const ConfigMap& base, const SweepGrid& grid,
                      const std::string& output_directory);

}  // namespace dpfed

#endif  // DPFED_EXPERIMENT_H_
