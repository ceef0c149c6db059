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

#include "dpfed/fedopt.h"

#include <glog/logging.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>
#include <utility>

#include "absl/strings/str_cat.h"
#include "dpfed/sharding.h"
#include "dpfed/status_macros.h"

namespace dpfed {
namespace {

// Runs fn(0) .. fn(count-1) on up to `threads` workers.
void ParallelFor(int64_t count, int threads,
                 const std::function<void(int64_t)>& fn) {
  const int64_t workers =
      std::clamp<int64_t>(threads, 1, std::max<int64_t>(count, 1));
  if (workers <= 1) {
    for (int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int64_t w = 0; w < workers; ++w) {
    pool.emplace_back([w, workers, count, &fn] {
      for (int64_t i = w; i < count; i += workers) fn(i);
    });
  }
}

bool IsPrivate(Algorithm algorithm) { return algorithm != Algorithm::kFedAvg; }

// Per-cohort-member work product of one round.
struct ClientMessage {
  ModelVector bounded;
  ModelVector noise;
  double update_norm = 0.0;
  bool zero_update = false;
  absl::Status status;
};

}  // namespace

ModelVector Clip(const ModelVector& z, double c) {
  const double norm = z.norm();
  if (norm <= c) return z;
  return z * (c / norm);
}

ModelVector Normalize(const ModelVector& z, double c, bool* was_zero) {
  const double norm = z.norm();
  if (was_zero != nullptr) *was_zero = norm == 0.0;
  if (norm == 0.0) return ModelVector::Zero(z.size());
  return z * (c / norm);
}

ModelVector ApplyPolicy(const SensitivityPolicy& policy, const ModelVector& u,
                        bool* was_zero) {
  if (was_zero != nullptr) *was_zero = false;
  switch (policy.kind) {
    case SensitivityKind::kClip:
      return Clip(u, policy.scale);
    case SensitivityKind::kNormalize:
      return Normalize(u, policy.scale, was_zero);
    case SensitivityKind::kNone:
      break;
  }
  return u;
}

absl::Status ValidateSchedule(const ScheduleSpec& schedule) {
  if (schedule.constant_override.has_value()) {
    if (!(*schedule.constant_override > 0.0)) {
      return absl::InvalidArgumentError("constant_eta must be > 0");
    }
  } else {
    if (!(schedule.eta0 > 0.0)) {
      return absl::InvalidArgumentError("eta0 must be > 0");
    }
    if (!(schedule.decay > 0.0 && schedule.decay <= 1.0)) {
      return absl::InvalidArgumentError("decay must lie in (0, 1]");
    }
    if (!schedule.beta_equals_eta && !(schedule.beta0 > 0.0)) {
      return absl::InvalidArgumentError("beta0 must be > 0");
    }
  }
  if (!(schedule.server_momentum >= 0.0 && schedule.server_momentum < 1.0)) {
    return absl::InvalidArgumentError("momentum must lie in [0, 1)");
  }
  return absl::OkStatus();
}

StepSizes LearningRate(const ScheduleSpec& schedule, int64_t round) {
  if (schedule.constant_override.has_value()) {
    return {*schedule.constant_override, *schedule.constant_override};
  }
  const double factor = std::pow(schedule.decay, static_cast<double>(round));
  const double eta = schedule.eta0 * factor;
  return {eta, schedule.beta_equals_eta ? eta : schedule.beta0 * factor};
}

absl::StatusOr<LocalResult> LocalUpdates(const ClientObjective& client,
                                         const ModelVector& w_start, double eta,
                                         int64_t local_steps,
                                         std::vector<ModelVector>* trajectory) {
  if (!(eta > 0.0)) return absl::InvalidArgumentError("eta must be > 0");
  if (local_steps < 1) {
    return absl::InvalidArgumentError("local_steps must be >= 1");
  }
  LocalResult out;
  out.w_end = w_start;
  out.update = ModelVector::Zero(w_start.size());
  ModelVector gradient(w_start.size());
  if (trajectory != nullptr) {
    trajectory->clear();
    trajectory->push_back(w_start);
  }
  for (int64_t step = 0; step < local_steps; ++step) {
    ValueAndGradient(client, out.w_end, &gradient);
    if (!gradient.allFinite()) {
      return absl::AbortedError(
          absl::StrCat("diverged: non-finite gradient at local step ", step));
    }
    out.w_end.noalias() -= eta * gradient;
    out.update += gradient;
    if (trajectory != nullptr) trajectory->push_back(out.w_end);
  }
  return out;
}

std::vector<int64_t> SampleCohort(const StreamKey& key, int64_t n, double r) {
  const double p = r / static_cast<double>(n);
  RandomStream stream(key);
  std::vector<int64_t> cohort;
  for (int64_t i = 0; i < n; ++i) {
    if (stream.NextUniform() < p) cohort.push_back(i);
  }
  return cohort;
}

ServerStep AggregateAndStep(const ModelVector& w,
                            const std::vector<ModelVector>& messages,
                            double divisor, double beta,
                            const ModelVector& momentum, double mu) {
  ModelVector aggregate = ModelVector::Zero(w.size());
  for (const ModelVector& m : messages) aggregate += m;
  if (!messages.empty()) aggregate /= divisor;
  ServerStep out;
  out.momentum = mu * momentum + aggregate;
  out.w_next = w - beta * out.momentum;
  return out;
}

std::string_view AlgorithmName(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kFedAvg:
      return "FedAvg";
    case Algorithm::kDPFedAvgClip:
      return "DPFedAvgClip";
    case Algorithm::kDPNormFedAvg:
      return "DPNormFedAvg";
  }
  return "unknown";
}

absl::StatusOr<Algorithm> ParseAlgorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kFedAvg, Algorithm::kDPFedAvgClip,
                      Algorithm::kDPNormFedAvg}) {
    if (name == AlgorithmName(a)) return a;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown algorithm '", std::string(name),
                   "' (expected FedAvg, DPFedAvgClip or DPNormFedAvg)"));
}

absl::StatusOr<InitRecipe> ParseInitRecipe(std::string_view name) {
  if (name == "I1") return InitRecipe::kI1;
  if (name == "I2") return InitRecipe::kI2;
  if (name == "zero") return InitRecipe::kZero;
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown init '", std::string(name), "' (expected I1, I2 or zero)"));
}

std::string_view InitRecipeName(InitRecipe recipe) {
  switch (recipe) {
    case InitRecipe::kI1:
      return "I1";
    case InitRecipe::kI2:
      return "I2";
    case InitRecipe::kZero:
      return "zero";
  }
  return "unknown";
}

ModelVector MakeInitialPoint(InitRecipe recipe, const ModelVector& w_star,
                             uint64_t master_seed) {
  if (recipe == InitRecipe::kZero) return ModelVector::Zero(w_star.size());
  RandomStream stream(StreamKey(master_seed, {{"init", 0}}));
  ModelVector z(w_star.size());
  for (int64_t j = 0; j < z.size(); ++j) z[j] = stream.NextUniform();
  return recipe == InitRecipe::kI1 ? ModelVector(w_star + z)
                                   : ModelVector(w_star + z / 5.0);
}

absl::Status ValidateRunConfig(const RunConfig& config, int64_t n_clients,
                               int64_t dimension) {
  if (config.rounds < 1) return absl::InvalidArgumentError("K must be >= 1");
  if (config.local_steps < 1) {
    return absl::InvalidArgumentError("E must be >= 1");
  }
  if (!(config.cohort_rate >= 1.0 &&
        config.cohort_rate <= static_cast<double>(n_clients))) {
    return absl::InvalidArgumentError(
        absl::StrCat("r must lie in [1, n] = [1, ", n_clients, "], got ",
                     config.cohort_rate));
  }
  if (config.init.size() != dimension) {
    return absl::InvalidArgumentError(
        absl::StrCat("initial point has dimension ", config.init.size(),
                     ", expected ", dimension));
  }
  RETURN_IF_ERROR(ValidateSchedule(config.schedule));
  if (IsPrivate(config.algorithm)) {
    if (!config.budget.has_value()) {
      return absl::InvalidArgumentError(
          absl::StrCat(std::string(AlgorithmName(config.algorithm)),
                       " requires a privacy budget"));
    }
    const SensitivityKind expected =
        config.algorithm == Algorithm::kDPFedAvgClip
            ? SensitivityKind::kClip
            : SensitivityKind::kNormalize;
    if (config.policy.kind != expected) {
      return absl::InvalidArgumentError(
          absl::StrCat(std::string(AlgorithmName(config.algorithm)),
                       " requires the matching sensitivity policy"));
    }
    if (!(config.policy.scale > 0.0)) {
      return absl::InvalidArgumentError("C must be > 0");
    }
    if (config.budget->n_clients != n_clients ||
        config.budget->dimension != dimension) {
      return absl::InvalidArgumentError(
          "privacy budget n and d must match the suite");
    }
    RETURN_IF_ERROR(KeyQuantityRho(*config.budget).status());
  } else {
    if (config.budget.has_value()) {
      return absl::InvalidArgumentError("FedAvg takes no privacy budget");
    }
    if (config.policy.kind != SensitivityKind::kNone) {
      return absl::InvalidArgumentError("FedAvg takes no sensitivity policy");
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<NoiseScale> NoiseFor(const RunConfig& config) {
  if (!IsPrivate(config.algorithm)) return NoiseScale{};
  ASSIGN_OR_RETURN(const double sigma_squared,
                   CalibrateNoiseVariance(*config.budget, config.rounds,
                                          config.policy.scale));
  return MakeNoiseScale(sigma_squared, config.cohort_rate);
}

absl::StatusOr<IterateTrace> RunFederated(const ProblemSuite& suite,
                                          const RunConfig& config) {
  const int64_t n = suite.size();
  const int64_t d = suite.dimension;
  RETURN_IF_ERROR(ValidateRunConfig(config, n, d));

  IterateTrace trace;
  ASSIGN_OR_RETURN(trace.noise, NoiseFor(config));
  if (IsPrivate(config.algorithm) &&
      OutsideCalibratedEpsilonRange(*config.budget, config.cohort_rate,
                                    config.rounds)) {
    LOG(WARNING) << "epsilon = " << config.budget->epsilon
                 << " >= r^2 K / n^2; the noise calibration is only known to "
                    "hold below that order";
  }

  const double f_star = suite.global_optimum.has_value()
                            ? GlobalValue(suite, *suite.global_optimum)
                            : 0.0;
  {
    RandomStream output_stream(StreamKey(config.master_seed, {{"output", 0}}));
    trace.k_tilde = static_cast<int64_t>(
        UniformIndex(output_stream, static_cast<uint64_t>(config.rounds)));
  }

  ModelVector w = config.init;
  ModelVector momentum = ModelVector::Zero(d);
  trace.initial_suboptimality = GlobalValue(suite, w) - f_star;
  trace.records.reserve(static_cast<size_t>(config.rounds));
  trace.update_norms.reserve(static_cast<size_t>(config.rounds));
  if (config.record_iterates) {
    trace.iterates.reserve(static_cast<size_t>(config.rounds + 1));
  }

  for (int64_t k = 0; k < config.rounds; ++k) {
    if (config.record_iterates) trace.iterates.push_back(w);
    if (k == trace.k_tilde) trace.w_priv = w;

    const StepSizes steps = LearningRate(config.schedule, k);
    const std::vector<int64_t> cohort =
        SampleCohort(StreamKey(config.master_seed, {{"sampling", k}}), n,
                     config.cohort_rate);
    const int64_t m = static_cast<int64_t>(cohort.size());

    std::vector<ClientMessage> messages(static_cast<size_t>(m));
    ParallelFor(m, config.threads, [&](int64_t slot) {
      const int64_t client = cohort[static_cast<size_t>(slot)];
      ClientMessage& msg = messages[static_cast<size_t>(slot)];
      absl::StatusOr<LocalResult> local =
          LocalUpdates(suite.clients[static_cast<size_t>(client)], w, steps.eta,
                       config.local_steps);
      if (!local.ok()) {
        msg.status = absl::Status(local.status().code(),
                                  absl::StrCat("round ", k, ", client ", client,
                                               ": ", local.status().message()));
        return;
      }
      msg.update_norm = local->update.norm();
      msg.bounded = ApplyPolicy(config.policy, local->update, &msg.zero_update);
      msg.noise = GaussianVector(
          StreamKey(config.master_seed, {{"noise", k}, {"client", client}}), d,
          trace.noise.per_client_variance);
    });

    ModelVector signal = ModelVector::Zero(d);
    ModelVector noise = ModelVector::Zero(d);
    std::vector<ModelVector> sent;
    sent.reserve(static_cast<size_t>(m));
    RoundRecord record;
    record.round = k;
    record.eta = steps.eta;
    record.cohort_size = m;
    std::vector<ClientUpdateNorm> norms;
    norms.reserve(static_cast<size_t>(m));
    int64_t clipped = 0;
    for (int64_t slot = 0; slot < m; ++slot) {
      ClientMessage& msg = messages[static_cast<size_t>(slot)];
      RETURN_IF_ERROR(msg.status);
      const int64_t client = cohort[static_cast<size_t>(slot)];
      if (msg.zero_update) {
        ++trace.zero_update_events;
        LOG(WARNING) << "round " << k << ", client " << client
                     << ": zero update left unnormalized, noise still added";
      }
      signal += msg.bounded;
      noise += msg.noise;
      sent.push_back(msg.bounded + msg.noise);
      norms.push_back({client, msg.update_norm});
      if (config.policy.kind != SensitivityKind::kNone &&
          msg.update_norm > config.policy.scale) {
        ++clipped;
      }
    }
    if (m > 0) {
      double total = 0.0;
      record.u_min = norms.front().norm;
      record.u_max = norms.front().norm;
      for (const auto& entry : norms) {
        total += entry.norm;
        record.u_min = std::min(record.u_min, entry.norm);
        record.u_max = std::max(record.u_max, entry.norm);
      }
      record.u_mean = total / static_cast<double>(m);
      record.clip_active_fraction =
          static_cast<double>(clipped) / static_cast<double>(m);
    } else {
      LOG(INFO) << "round " << k << ": empty cohort, model unchanged";
    }
    record.snr = Snr(signal, noise);

    const double divisor = config.average_by_actual && m > 0
                               ? static_cast<double>(m)
                               : config.cohort_rate;
    ServerStep step = AggregateAndStep(w, sent, divisor, steps.beta, momentum,
                                       config.schedule.server_momentum);
    if (!step.w_next.allFinite()) {
      return absl::AbortedError(
          absl::StrCat("diverged: non-finite global iterate after round ", k));
    }
    w = std::move(step.w_next);
    momentum = std::move(step.momentum);
    record.suboptimality = GlobalValue(suite, w) - f_star;
    trace.records.push_back(record);
    trace.update_norms.push_back(std::move(norms));
  }
  if (config.record_iterates) trace.iterates.push_back(w);
  trace.final_w = std::move(w);
  return trace;
}

}  // namespace dpfed
