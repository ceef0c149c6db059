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

#ifndef DPFED_FEDOPT_H_
#define DPFED_FEDOPT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpfed/metrics.h"
#include "dpfed/model_vector.h"
#include "dpfed/objectives.h"
#include "dpfed/privacy.h"
#include "dpfed/random_stream.h"

namespace dpfed {

// ---------------------------------------------------------------------------
// Sensitivity bounding.

enum class SensitivityKind { kClip, kNormalize, kNone };

struct SensitivityPolicy {
  SensitivityKind kind = SensitivityKind::kNone;
  double scale = 0.0;  // C; unused for kNone

  static SensitivityPolicy Clip(double c) {
    return {SensitivityKind::kClip, c};
  }
  static SensitivityPolicy Normalize(double c) {
    return {SensitivityKind::kNormalize, c};
  }
  static SensitivityPolicy None() { return {SensitivityKind::kNone, 0.0}; }
};

// z * min(1, c / ||z||): projection onto the radius-c ball. Zero maps to
// zero. When ||z|| > c the result is computed as z * (c / ||z||), the same
// expression Normalize uses, so the two agree bitwise there.
ModelVector Clip(const ModelVector& z, double c);

// c z / ||z||, computed as z * (c / ||z||). The operator is undefined at
// zero; the zero vector is returned instead and *was_zero is set.
ModelVector Normalize(const ModelVector& z, double c, bool* was_zero = nullptr);

ModelVector ApplyPolicy(const SensitivityPolicy& policy, const ModelVector& u,
                        bool* was_zero = nullptr);

// ---------------------------------------------------------------------------
// Step sizes.

struct ScheduleSpec {
  double eta0 = 0.01;
  // eta_k = decay^k * eta0.
  double decay = 1.0;
  bool beta_equals_eta = true;
  // Server rate when beta_equals_eta is false; decays like eta.
  double beta0 = 0.01;
  // When set, eta_k = beta_k = constant_override for every k.
  std::optional<double> constant_override;
  // Heavy-ball coefficient on the server aggregate; 0 disables it.
  double server_momentum = 0.0;
};

absl::Status ValidateSchedule(const ScheduleSpec& schedule);

struct StepSizes {
  double eta = 0.0;
  double beta = 0.0;
};

StepSizes LearningRate(const ScheduleSpec& schedule, int64_t round);

// ---------------------------------------------------------------------------
// Client and server steps.

struct LocalResult {
  ModelVector w_end;
  // u = (w_start - w_end) / eta, accumulated as sum_tau grad f_i(w_tau).
  ModelVector update;
};

// E full-gradient steps w <- w - eta grad f_i(w). If `trajectory` is given it
// receives w_0 .. w_E. Aborted when a gradient is non-finite.
absl::StatusOr<LocalResult> LocalUpdates(
    const ClientObjective& client, const ModelVector& w_start, double eta,
    int64_t local_steps, std::vector<ModelVector>* trajectory = nullptr);

// Independent Bernoulli(r/n) inclusion per client, drawing client i's
// uniform as the i-th draw of the stream. Ascending ids.
std::vector<int64_t> SampleCohort(const StreamKey& key, int64_t n, double r);

struct ServerStep {
  ModelVector w_next;
  ModelVector momentum;
};

// a = (1/divisor) sum messages; m <- mu m + a; w <- w - beta m. Messages are
// summed in the given order.
ServerStep AggregateAndStep(const ModelVector& w,
                            const std::vector<ModelVector>& messages,
                            double divisor, double beta,
                            const ModelVector& momentum, double mu);

// ---------------------------------------------------------------------------
// Full runs.

enum class Algorithm { kFedAvg, kDPFedAvgClip, kDPNormFedAvg };

std::string_view AlgorithmName(Algorithm algorithm);
absl::StatusOr<Algorithm> ParseAlgorithm(std::string_view name);

enum class InitRecipe { kI1, kI2, kZero };

absl::StatusOr<InitRecipe> ParseInitRecipe(std::string_view name);
std::string_view InitRecipeName(InitRecipe recipe);

// I1: w* + z, I2: w* + z/5, z_j ~ uniform(0, 1) from key/("init", 0).
// kZero ignores w_star.
ModelVector MakeInitialPoint(InitRecipe recipe, const ModelVector& w_star,
                             uint64_t master_seed);

struct RunConfig {
  Algorithm algorithm = Algorithm::kFedAvg;
  // Required for DP algorithms, forbidden for FedAvg.
  std::optional<PrivacyBudget> budget;
  int64_t rounds = 1;       // K
  int64_t local_steps = 1;  // E
  double cohort_rate = 1;   // r, expected cohort size
  ScheduleSpec schedule;
  SensitivityPolicy policy;
  ModelVector init;
  uint64_t master_seed = 0;
  // Divide the aggregate by |S_k| instead of r.
  bool average_by_actual = false;
  // Keep w_0 .. w_K in the trace.
  bool record_iterates = false;
  // Worker threads for per-client work; results do not depend on it.
  int threads = 1;
};

// Checks the RunConfig invariants against a suite of n clients.
absl::Status ValidateRunConfig(const RunConfig& config, int64_t n_clients,
                               int64_t dimension);

struct ClientUpdateNorm {
  int64_t client = 0;
  double norm = 0.0;
};

struct IterateTrace {
  std::vector<RoundRecord> records;
  // Per round, ||u|| of every cohort member in ascending client order.
  std::vector<std::vector<ClientUpdateNorm>> update_norms;
  // w_0 .. w_K when record_iterates is set.
  std::vector<ModelVector> iterates;
  ModelVector final_w;
  // Uniform on {0, .., K-1} from seed/("output", 0); w_priv = w_{k_tilde}.
  int64_t k_tilde = 0;
  ModelVector w_priv;
  NoiseScale noise;
  double initial_suboptimality = 0.0;
  int64_t zero_update_events = 0;
};

// Runs DP-FedAvg with clipping, DP-NormFedAvg, or FedAvg for K rounds.
//
// Per round k: sample the cohort from seed/("sampling", k); each member runs
// LocalUpdates, bounds u with the policy and adds noise drawn from
// seed/("noise", k)/("client", i) with variance r sigma^2; the server
// aggregates in ascending client order. Variants run with the same seed
// therefore see identical cohorts and noise.
//
// The suite's global optimum, when present, defines the suboptimality
// baseline; otherwise suboptimality holds f(w).
absl::StatusOr<IterateTrace> RunFederated(const ProblemSuite& suite,
                                          const RunConfig& config);

// Noise variances RunFederated would use.
absl::StatusOr<NoiseScale> NoiseFor(const RunConfig& config);

}  // namespace dpfed

#endif  // DPFED_FEDOPT_H_
