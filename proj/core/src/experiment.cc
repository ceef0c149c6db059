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

#include "dpfed/experiment.h"

#include <glog/logging.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "dpfed/feature_io.h"
#include "dpfed/privacy.h"
#include "dpfed/status_macros.h"
#include "json.hpp"

namespace dpfed {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr double kQuadraticTolerance = 1e-10;
constexpr double kLogisticTolerance = 1e-8;

double MeanOf(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

PrivacyBudget BudgetFor(const ExperimentPlan& plan, const ProblemSuite& suite) {
  PrivacyBudget budget;
  budget.epsilon = plan.epsilon;
  budget.delta = plan.delta;
  budget.q_constant = plan.q_constant;
  budget.n_clients = suite.size();
  budget.dimension = suite.dimension;
  return budget;
}

bool IsPrivate(Algorithm a) { return a != Algorithm::kFedAvg; }

std::string RunStem(Algorithm a, uint64_t seed) {
  return absl::StrCat(std::string(VariantName(a)), "_", seed);
}

absl::Status WriteFile(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot write ", path.string()));
  }
  out << contents;
  out.close();
  if (!out) {
    return absl::DataLossError(absl::StrCat("short write to ", path.string()));
  }
  return absl::OkStatus();
}

// Tracks written files so a failed plan leaves nothing behind.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  absl::Status Write(const std::string& name, const std::string& contents) {
    RETURN_IF_ERROR(WriteFile(dir_ / name, contents));
    names_.push_back(name);
    return absl::OkStatus();
  }

  void RemoveAll() {
    for (const std::string& name : names_) {
      std::error_code ignored;
      fs::remove(dir_ / name, ignored);
    }
    names_.clear();
  }

  const std::vector<std::string>& names() const { return names_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

Json VectorJson(const ModelVector& v) {
  Json out = Json::array();
  for (int64_t j = 0; j < v.size(); ++j) out.push_back(v[j]);
  return out;
}

std::string TrajectoryCsv(const std::vector<Point2d>& points) {
  std::string out = "round,x,y\n";
  for (size_t t = 0; t < points.size(); ++t) {
    absl::StrAppend(&out, t, ",", Json(points[t][0]).dump(), ",",
                    Json(points[t][1]).dump(), "\n");
  }
  return out;
}

}  // namespace

absl::StatusOr<BuiltSuite> BuildSuite(const SuiteSpec& spec) {
  BuiltSuite built;
  if (spec.kind == SuiteKind::kQuadratic) {
    ASSIGN_OR_RETURN(
        built.suite,
        GenerateQuadraticSuite(StreamKey(spec.seed), spec.n, spec.dimension,
                               spec.factor_rank, spec.factor_std));
    RETURN_IF_ERROR(Prepare(&built.suite, kQuadraticTolerance));
  } else {
    LabeledData data;
    if (!spec.features_path.empty()) {
      ASSIGN_OR_RETURN(
          data, LoadFeatureMatrix(spec.features_path, FeatureFormat::kAuto));
    } else {
      data = GenerateClassificationData(
          StreamKey(spec.seed, {{"data", 0}}), spec.num_classes,
          spec.samples_per_class, spec.feature_dim, spec.separation);
    }
    data.features = WithBiasColumn(data.features);
    ASSIGN_OR_RETURN(
        ShardAssignment shards,
        PartitionByLabelShards(data.labels, spec.n, spec.shards_per_client,
                               StreamKey(spec.seed, {{"shards", 0}})));
    ASSIGN_OR_RETURN(
        built.suite,
        MakeLogisticSuite(data, shards.client_to_sample_indices, spec.l2));
    RETURN_IF_ERROR(Prepare(&built.suite, kLogisticTolerance));
    built.stats.centralized_accuracy =
        ClassificationAccuracy(data.features, data.labels, data.num_classes,
                               *built.suite.global_optimum);
    built.data = std::move(data);
    built.shards = std::move(shards);
  }
  const std::vector<double>& gaps = *built.suite.heterogeneity;
  built.stats.smoothness = built.suite.smoothness_bound;
  built.stats.f_star = GlobalValue(built.suite, *built.suite.global_optimum);
  built.stats.max_heterogeneity = *std::max_element(gaps.begin(), gaps.end());
  built.stats.mean_heterogeneity = MeanOf(gaps);
  if (spec.kind == SuiteKind::kQuadratic) {
    built.stats.lambda_estimate = EstimateAssumptionLambda(
        built.suite, StreamKey(spec.seed, {{"lambda", 0}}), 4,
        0.5 / built.suite.smoothness_bound);
  }
  return built;
}

absl::StatusOr<ResolvedTheorem> ResolveTheorem(const ExperimentPlan& plan,
                                               const BuiltSuite& built) {
  if (!plan.theorem.has_value()) {
    return absl::FailedPreconditionError("plan is not in theorem mode");
  }
  const ProblemSuite& suite = built.suite;
  ResolvedTheorem out;
  out.alpha = plan.theorem->alpha;
  ASSIGN_OR_RETURN(out.rho, KeyQuantityRho(BudgetFor(plan, suite)));
  out.c_hat = plan.clip_scale / static_cast<double>(plan.local_steps);
  const ModelVector& w_star = *suite.global_optimum;
  const double distance =
      (MakeInitialPoint(plan.init, w_star, plan.seeds.front()) - w_star).norm();
  out.gamma = plan.theorem->gamma.value_or(suite.smoothness_bound * distance);
  BoundInputs inputs;
  inputs.smoothness = suite.smoothness_bound;
  inputs.rho = out.rho;
  inputs.c_hat = out.c_hat;
  inputs.local_steps = plan.local_steps;
  inputs.alpha = out.alpha;
  inputs.gamma = out.gamma;
  inputs.heterogeneity = *suite.heterogeneity;
  RETURN_IF_ERROR(CheckTheoremPreconditions(inputs));
  out.schedule = TheoremModeSchedule(out.rho, suite.smoothness_bound, out.alpha,
                                     out.gamma, out.c_hat, plan.local_steps);
  return out;
}

absl::StatusOr<RunConfig> MakeRunConfig(
    const ExperimentPlan& plan, const BuiltSuite& built, Algorithm algorithm,
    uint64_t seed, const std::optional<ResolvedTheorem>& theorem) {
  const ProblemSuite& suite = built.suite;
  RunConfig config;
  config.algorithm = algorithm;
  config.rounds = plan.rounds;
  config.local_steps = plan.local_steps;
  config.cohort_rate =
      plan.cohort_rate.value_or(static_cast<double>(suite.size()));
  config.schedule = plan.schedule;
  switch (algorithm) {
    case Algorithm::kFedAvg:
      config.policy = SensitivityPolicy::None();
      break;
    case Algorithm::kDPFedAvgClip:
      config.policy = SensitivityPolicy::Clip(plan.clip_scale);
      break;
    case Algorithm::kDPNormFedAvg:
      config.policy = SensitivityPolicy::Normalize(plan.clip_scale);
      break;
  }
  if (IsPrivate(algorithm)) config.budget = BudgetFor(plan, suite);
  config.init = MakeInitialPoint(plan.init, *suite.global_optimum, seed);
  config.master_seed = seed;
  config.average_by_actual = plan.average_by_actual;
  config.threads = plan.threads;
  if (theorem.has_value()) {
    config.rounds = theorem->schedule.rounds;
    config.schedule.constant_override = theorem->schedule.eta;
    config.schedule.beta_equals_eta = true;
    config.schedule.server_momentum = 0.0;
    config.cohort_rate = static_cast<double>(suite.size());
    config.record_iterates = true;
  }
  RETURN_IF_ERROR(ValidateRunConfig(config, suite.size(), suite.dimension));
  return config;
}

absl::StatusOr<BoundReport> ComputeBoundReport(const ProblemSuite& suite,
                                               const ResolvedTheorem& theorem,
                                               const RunConfig& config,
                                               const IterateTrace& trace) {
  if (!IsPrivate(config.algorithm)) {
    return absl::InvalidArgumentError("bounds apply to private runs only");
  }
  if (trace.iterates.empty()) {
    return absl::FailedPreconditionError("trace has no iterates");
  }
  BoundReport report;
  report.algorithm = config.algorithm;
  report.seed = config.master_seed;
  report.eta = LearningRate(config.schedule, 0).eta;
  BoundInputs& in = report.inputs;
  in.smoothness = suite.smoothness_bound;
  in.rho = theorem.rho;
  in.c_hat = theorem.c_hat;
  in.local_steps = config.local_steps;
  in.rounds = static_cast<int64_t>(trace.update_norms.size());
  in.alpha = theorem.alpha;
  in.gamma = theorem.gamma;
  in.init_distance = (trace.iterates.front() - *suite.global_optimum).norm();
  in.heterogeneity = *suite.heterogeneity;
  ASSIGN_OR_RETURN(RoundObservations obs, BuildRoundObservations(suite, trace));
  if (config.algorithm == Algorithm::kDPFedAvgClip) {
    ASSIGN_OR_RETURN(ClippingBound bound, ClipBound(in));
    report.term_a = bound.term_a;
    report.het_term = bound.term_b;
    report.het_term_indicator = ClipIndicatorHetTerm(in, obs);
    report.rhs = bound.rhs;
    report.lhs = ClipBoundLhs(in, obs);
    report.simplified = SimplifiedClipBound(in);
  } else {
    ASSIGN_OR_RETURN(NormalizationBound bound, NormBound(in, obs));
    report.term_a = bound.term_a;
    report.het_term = bound.het_term;
    report.het_term_indicator = bound.het_term_indicator;
    report.rhs = bound.rhs;
    report.lhs = NormBoundLhs(in, obs);
  }
  report.rhs_indicator = report.term_a + report.het_term_indicator;
  return report;
}

std::string BoundReportToJson(const BoundReport& r) {
  const std::vector<double>& gaps = r.inputs.heterogeneity;
  Json j;
  j["algorithm"] = std::string(AlgorithmName(r.algorithm));
  j["seed"] = r.seed;
  j["rho"] = r.inputs.rho;
  j["c_hat"] = r.inputs.c_hat;
  j["E"] = r.inputs.local_steps;
  j["K"] = r.inputs.rounds;
  j["alpha"] = r.inputs.alpha;
  j["gamma"] = r.inputs.gamma;
  j["eta"] = r.eta;
  j["L"] = r.inputs.smoothness;
  j["init_distance"] = r.inputs.init_distance;
  j["max_delta"] =
      gaps.empty() ? 0.0 : *std::max_element(gaps.begin(), gaps.end());
  j["mean_delta"] = MeanOf(gaps);
  j["term_a"] = r.term_a;
  j["het_term"] = r.het_term;
  j["het_term_indicator"] = r.het_term_indicator;
  j["rhs"] = r.rhs;
  j["rhs_indicator"] = r.rhs_indicator;
  j["lhs"] = r.lhs;
  j["margin"] = r.rhs - r.lhs;
  j["holds"] = r.holds();
  if (r.simplified.has_value()) j["simplified_bound"] = *r.simplified;
  return j.dump(2) + "\n";
}

const RunOutcome* PlanOutcome::Find(Algorithm algorithm, uint64_t seed) const {
  for (const RunOutcome& run : runs) {
    if (run.algorithm == algorithm && run.seed == seed) return &run;
  }
  return nullptr;
}

double PlanOutcome::MeanFinalSuboptimality(Algorithm algorithm) const {
  std::vector<double> values;
  for (const RunOutcome& run : runs) {
    if (run.algorithm == algorithm) values.push_back(run.final_suboptimality);
  }
  return values.empty() ? std::numeric_limits<double>::quiet_NaN()
                        : MeanOf(values);
}

namespace {

absl::StatusOr<PlanOutcome> ExecuteInto(const ExperimentPlan& plan,
                                        const BuiltSuite& built,
                                        const RunOptions& options,
                                        OutputSet* outputs) {
  const ProblemSuite& suite = built.suite;
  PlanOutcome outcome;
  outcome.stats = built.stats;
  const bool any_private =
      std::any_of(plan.variants.begin(), plan.variants.end(), IsPrivate);
  if (any_private) {
    ASSIGN_OR_RETURN(double rho, KeyQuantityRho(BudgetFor(plan, suite)));
    outcome.rho = rho;
    if (OutsideCalibratedEpsilonRange(
            BudgetFor(plan, suite),
            plan.cohort_rate.value_or(static_cast<double>(suite.size())),
            plan.rounds)) {
      LOG(WARNING) << "epsilon = " << plan.epsilon
                   << " is at or above r^2 K / n^2; the noise calibration "
                      "constant is not checked there";
    }
  }
  if (plan.theorem.has_value()) {
    ASSIGN_OR_RETURN(outcome.theorem, ResolveTheorem(plan, built));
  }
  for (uint64_t seed : plan.seeds) {
    for (Algorithm algorithm : plan.variants) {
      ASSIGN_OR_RETURN(RunConfig config, MakeRunConfig(plan, built, algorithm,
                                                       seed, outcome.theorem));
      const bool first_seed = seed == plan.seeds.front();
      config.record_iterates = config.record_iterates || plan.record_trace ||
                               (plan.trajectory && first_seed);
      ASSIGN_OR_RETURN(IterateTrace trace, RunFederated(suite, config));
      RunOutcome run;
      run.algorithm = algorithm;
      run.seed = seed;
      run.metrics_file = RunStem(algorithm, seed) + ".csv";
      run.final_suboptimality = trace.records.back().suboptimality;
      std::vector<double> subopt;
      for (const RoundRecord& r : trace.records) {
        subopt.push_back(r.suboptimality);
      }
      run.mean_suboptimality = MeanOf(subopt);
      run.private_output_suboptimality =
          GlobalValue(suite, trace.w_priv) - built.stats.f_star;
      if (built.data.has_value()) {
        run.final_accuracy =
            ClassificationAccuracy(built.data->features, built.data->labels,
                                   built.data->num_classes, trace.final_w);
      }
      if (outcome.theorem.has_value()) {
        ASSIGN_OR_RETURN(
            BoundReport report,
            ComputeBoundReport(suite, *outcome.theorem, config, trace));
        run.bounds = report;
      }
      if (options.write_outputs) {
        RETURN_IF_ERROR(
            outputs->Write(run.metrics_file, FormatMetricCsv(trace.records)));
        if (plan.record_trace) {
          RETURN_IF_ERROR(
              outputs->Write("trace_" + RunStem(algorithm, seed) + ".json",
                             TraceToJson(trace, algorithm, seed)));
        }
        if (run.bounds.has_value()) {
          RETURN_IF_ERROR(
              outputs->Write("bounds_" + RunStem(algorithm, seed) + ".json",
                             BoundReportToJson(*run.bounds)));
        }
      }
      run.trace = std::move(trace);
      outcome.runs.push_back(std::move(run));
    }
  }

  std::vector<std::pair<Algorithm, std::string>> trajectory_files;
  if (plan.trajectory) {
    std::vector<std::vector<ModelVector>> paths;
    for (Algorithm algorithm : plan.variants) {
      paths.push_back(
          outcome.Find(algorithm, plan.seeds.front())->trace.iterates);
    }
    ASSIGN_OR_RETURN(TrajectoryProjection projection,
                     ProjectTrajectories2d(paths, *suite.global_optimum,
                                           plan.smoothing_window));
    if (projection.degenerate) {
      LOG(WARNING) << "iterates span fewer than two directions";
    }
    for (size_t v = 0; v < plan.variants.size(); ++v) {
      const std::string name = absl::StrCat(
          "trajectory_", std::string(VariantName(plan.variants[v])), ".csv");
      if (options.write_outputs) {
        RETURN_IF_ERROR(
            outputs->Write(name, TrajectoryCsv(projection.runs[v])));
      }
      trajectory_files.emplace_back(plan.variants[v], name);
    }
  }

  if (options.write_outputs) {
    Json summary;
    Json& s = summary["suite"];
    s["kind"] =
        plan.suite.kind == SuiteKind::kQuadratic ? "quadratic" : "logistic";
    s["n"] = suite.size();
    s["d"] = suite.dimension;
    s["smoothness"] = built.stats.smoothness;
    s["f_star"] = built.stats.f_star;
    s["max_heterogeneity"] = built.stats.max_heterogeneity;
    s["mean_heterogeneity"] = built.stats.mean_heterogeneity;
    if (built.stats.lambda_estimate.has_value()) {
      s["lambda_estimate"] = *built.stats.lambda_estimate;
    }
    if (built.stats.centralized_accuracy.has_value()) {
      s["centralized_accuracy"] = *built.stats.centralized_accuracy;
    }
    if (built.shards.has_value()) {
      s["dropped_samples"] = built.shards->dropped_samples;
    }
    Json& c = summary["config"];
    c["K"] = outcome.theorem ? outcome.theorem->schedule.rounds : plan.rounds;
    c["E"] = plan.local_steps;
    c["r"] = plan.cohort_rate.value_or(static_cast<double>(suite.size()));
    c["C"] = plan.clip_scale;
    c["epsilon"] = plan.epsilon;
    c["delta"] = plan.delta;
    c["q"] = plan.q_constant;
    c["eta0"] = plan.schedule.eta0;
    c["decay"] = plan.schedule.decay;
    c["momentum"] = plan.schedule.server_momentum;
    c["init"] = std::string(InitRecipeName(plan.init));
    c["seeds"] = plan.seeds;
    if (outcome.rho.has_value()) summary["rho"] = *outcome.rho;
    if (outcome.theorem.has_value()) {
      Json& t = summary["theorem"];
      t["alpha"] = outcome.theorem->alpha;
      t["gamma"] = outcome.theorem->gamma;
      t["c_hat"] = outcome.theorem->c_hat;
      t["eta"] = outcome.theorem->schedule.eta;
      t["K"] = outcome.theorem->schedule.rounds;
    }
    Json& variants = summary["variants"];
    for (Algorithm algorithm : plan.variants) {
      Json v;
      v["algorithm"] = std::string(AlgorithmName(algorithm));
      std::vector<double> finals;
      std::vector<double> means;
      std::vector<double> accuracies;
      Json runs = Json::array();
      for (const RunOutcome& run : outcome.runs) {
        if (run.algorithm != algorithm) continue;
        finals.push_back(run.final_suboptimality);
        means.push_back(run.mean_suboptimality);
        Json r;
        r["seed"] = run.seed;
        r["metrics"] = run.metrics_file;
        r["final_suboptimality"] = run.final_suboptimality;
        r["mean_suboptimality"] = run.mean_suboptimality;
        r["k_tilde"] = run.trace.k_tilde;
        r["private_output_suboptimality"] = run.private_output_suboptimality;
        r["zero_update_events"] = run.trace.zero_update_events;
        if (run.final_accuracy.has_value()) {
          r["final_accuracy"] = *run.final_accuracy;
          accuracies.push_back(*run.final_accuracy);
        }
        if (plan.record_trace) {
          r["trace"] = "trace_" + RunStem(algorithm, run.seed) + ".json";
        }
        if (run.bounds.has_value()) {
          r["bounds"] = "bounds_" + RunStem(algorithm, run.seed) + ".json";
          r["bound_holds"] = run.bounds->holds();
        }
        v["sigma_squared"] = run.trace.noise.sigma_squared;
        runs.push_back(std::move(r));
      }
      v["mean_final_suboptimality"] = MeanOf(finals);
      v["mean_suboptimality"] = MeanOf(means);
      if (!accuracies.empty()) v["mean_final_accuracy"] = MeanOf(accuracies);
      v["runs"] = std::move(runs);
      variants[std::string(VariantName(algorithm))] = std::move(v);
    }
    if (!trajectory_files.empty()) {
      Json& t = summary["trajectories"];
      for (const auto& [algorithm, name] : trajectory_files) {
        t[std::string(VariantName(algorithm))] = name;
      }
    }
    if (built.shards.has_value()) {
      RETURN_IF_ERROR(
          outputs->Write("shards.json", ShardAssignmentToJson(*built.shards)));
      summary["shards"] = "shards.json";
    }
    RETURN_IF_ERROR(outputs->Write("summary.json", summary.dump(2) + "\n"));
  }
  if (!options.keep_iterates) {
    for (RunOutcome& run : outcome.runs) run.trace.iterates.clear();
  }
  outcome.files = outputs->names();
  return outcome;
}

}  // namespace

absl::StatusOr<PlanOutcome> ExecutePlan(const ExperimentPlan& plan,
                                        const BuiltSuite& built,
                                        const RunOptions& options) {
  const fs::path dir(plan.output_directory);
  if (options.write_outputs) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
      return absl::PermissionDeniedError(
          absl::StrCat("cannot create ", dir.string(), ": ", ec.message()));
    }
  }
  OutputSet outputs(dir);
  absl::StatusOr<PlanOutcome> outcome =
      ExecuteInto(plan, built, options, &outputs);
  if (!outcome.ok()) outputs.RemoveAll();
  return outcome;
}

absl::StatusOr<PlanOutcome> RunPlan(const ExperimentPlan& plan,
                                    const RunOptions& options) {
  ASSIGN_OR_RETURN(BuiltSuite built, BuildSuite(plan.suite));
  return ExecutePlan(plan, built, options);
}

int ExitCodeFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return 0;
    case absl::StatusCode::kAborted:
      return 2;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kOutOfRange:
    case absl::StatusCode::kNotFound:
      return 3;
    default:
      return 1;
  }
}

std::string TraceToJson(const IterateTrace& trace, Algorithm algorithm,
                        uint64_t seed) {
  Json j;
  j["algorithm"] = std::string(AlgorithmName(algorithm));
  j["seed"] = seed;
  j["k_tilde"] = trace.k_tilde;
  Json norms = Json::array();
  for (const auto& round : trace.update_norms) {
    Json row = Json::array();
    for (const ClientUpdateNorm& u : round) row.push_back({u.client, u.norm});
    norms.push_back(std::move(row));
  }
  j["update_norms"] = std::move(norms);
  Json iterates = Json::array();
  for (const ModelVector& w : trace.iterates) iterates.push_back(VectorJson(w));
  j["iterates"] = std::move(iterates);
  return j.dump() + "\n";
}

absl::StatusOr<TraceFile> ParseTraceJson(const std::string& text) {
  const Json j = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    return absl::InvalidArgumentError("trace is not a JSON object");
  }
  TraceFile out;
  try {
    ASSIGN_OR_RETURN(out.algorithm,
                     ParseAlgorithm(j.at("algorithm").get<std::string>()));
    out.seed = j.at("seed").get<uint64_t>();
    out.trace.k_tilde = j.at("k_tilde").get<int64_t>();
    for (const Json& round : j.at("update_norms")) {
      std::vector<ClientUpdateNorm> row;
      for (const Json& entry : round) {
        row.push_back({entry.at(0).get<int64_t>(), entry.at(1).get<double>()});
      }
      out.trace.update_norms.push_back(std::move(row));
    }
    for (const Json& w : j.at("iterates")) {
      ModelVector v(static_cast<int64_t>(w.size()));
      for (size_t t = 0; t < w.size(); ++t) {
        v[static_cast<int64_t>(t)] = w.at(t).get<double>();
      }
      out.trace.iterates.push_back(std::move(v));
    }
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed trace: ", e.what()));
  }
  if (!out.trace.iterates.empty())
    out.trace.final_w = out.trace.iterates.back();
  return out;
}

absl::StatusOr<BoundReport> BoundsFromTrace(const ExperimentPlan& plan,
                                            const TraceFile& trace) {
  if (!plan.theorem.has_value()) {
    return absl::FailedPreconditionError(
        "bounds need a theorem-mode config (theorem_mode = true)");
  }
  ASSIGN_OR_RETURN(BuiltSuite built, BuildSuite(plan.suite));
  if (!trace.trace.iterates.empty() &&
      trace.trace.iterates.front().size() != built.suite.dimension) {
    return absl::InvalidArgumentError(
        "trace dimension does not match the configured suite");
  }
  ASSIGN_OR_RETURN(ResolvedTheorem theorem, ResolveTheorem(plan, built));
  ASSIGN_OR_RETURN(RunConfig config, MakeRunConfig(plan, built, trace.algorithm,
                                                   trace.seed, theorem));
  return ComputeBoundReport(built.suite, theorem, config, trace.trace);
}

absl::StatusOr<SweepGrid> ParseSweepGrid(std::string_view text) {
  ASSIGN_OR_RETURN(ConfigMap map, ParseConfigText(text));
  SweepGrid grid;
  for (const ConfigEntry& entry : map.entries) {
    if (entry.key == "out") {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", entry.line, ": `out` cannot be swept"));
    }
    std::vector<std::string> values;
    for (absl::string_view v : absl::StrSplit(entry.value, ',')) {
      v = absl::StripAsciiWhitespace(v);
      if (!v.empty()) values.emplace_back(v);
    }
    if (values.empty()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", entry.line, ": key `", entry.key, "` has no values"));
    }
    for (const auto& axis : grid.axes) {
      if (axis.first == entry.key) {
        return absl::InvalidArgumentError(absl::StrCat(
            "line ", entry.line, ": key `", entry.key, "` repeated"));
      }
    }
    grid.axes.emplace_back(entry.key, std::move(values));
  }
  if (grid.axes.empty()) return absl::InvalidArgumentError("empty grid");
  return grid;
}

absl::Status RunSweep(const ConfigMap& base, const SweepGrid& grid,
                      const std::string& output_directory) {
  std::vector<size_t> cursor(grid.axes.size(), 0);
  Json index = Json::array();
  while (true) {
    ConfigMap config = base;
    std::vector<std::string> parts;
    Json point;
    for (size_t a = 0; a < grid.axes.size(); ++a) {
      const auto& [key, values] = grid.axes[a];
      config.Set(key, values[cursor[a]]);
      parts.push_back(absl::StrCat(key, "=", values[cursor[a]]));
      point[key] = values[cursor[a]];
    }
    const std::string name = absl::StrJoin(parts, "_");
    config.Set("out", (fs::path(output_directory) / name).string());
    ASSIGN_OR_RETURN(ExperimentPlan plan, BuildPlan(config));
    LOG(INFO) << "sweep point " << name;
    ASSIGN_OR_RETURN(
        PlanOutcome outcome,
        RunPlan(plan, {.write_outputs = true, .keep_iterates = false}));
    Json entry;
    entry["point"] = std::move(point);
    entry["directory"] = name;
    for (Algorithm a : plan.variants) {
      entry["mean_final_suboptimality"][std::string(VariantName(a))] =
          outcome.MeanFinalSuboptimality(a);
    }
    index.push_back(std::move(entry));
    size_t a = grid.axes.size();
    while (a > 0) {
      --a;
      if (++cursor[a] < grid.axes[a].second.size()) break;
      cursor[a] = 0;
      if (a == 0) {
        return WriteFile(fs::path(output_directory) / "sweep.json",
                         index.dump(2) + "\n");
      }
    }
  }
}

}  // namespace dpfed
