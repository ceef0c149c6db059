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

#include "dpfed/privacy.h"

#include <cmath>

#include "absl/strings/str_cat.h"

namespace dpfed {

absl::Status ValidateBudget(const PrivacyBudget& budget) {
  if (!(budget.epsilon > 0.0) || !std::isfinite(budget.epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be finite and > 0 (vacuous privacy), got ",
                     budget.epsilon));
  }
  if (!(budget.delta > 0.0 && budget.delta < 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "delta must lie in (0, 1) (vacuous privacy), got ", budget.delta));
  }
  if (!(budget.q_constant > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("q must be > 0, got ", budget.q_constant));
  }
  if (budget.n_clients < 1 || budget.dimension < 1) {
    return absl::InvalidArgumentError("n and d must be positive");
  }
  return absl::OkStatus();
}

absl::StatusOr<double> KeyQuantityRho(const PrivacyBudget& budget) {
  if (absl::Status s = ValidateBudget(budget); !s.ok()) return s;
  const double rho =
      std::sqrt(budget.q_constant * static_cast<double>(budget.dimension) *
                std::log(1.0 / budget.delta)) /
      (static_cast<double>(budget.n_clients) * budget.epsilon);
  if (!(rho < 1.0)) {
    return absl::FailedPreconditionError(
        absl::StrCat("n too small: rho = ", rho, " is not < 1"));
  }
  return rho;
}

absl::StatusOr<double> CalibrateNoiseVariance(const PrivacyBudget& budget,
                                              int64_t rounds,
                                              double clip_scale) {
  if (absl::Status s = ValidateBudget(budget); !s.ok()) return s;
  if (rounds < 1) {
    return absl::InvalidArgumentError("rounds must be >= 1");
  }
  if (!(clip_scale >= 0.0)) {
    return absl::InvalidArgumentError("clip scale must be >= 0");
  }
  const double n = static_cast<double>(budget.n_clients);
  return budget.q_constant * static_cast<double>(rounds) * clip_scale *
         clip_scale * std::log(1.0 / budget.delta) /
         (n * n * budget.epsilon * budget.epsilon);
}

NoiseScale MakeNoiseScale(double sigma_squared, double cohort_rate) {
  return NoiseScale{sigma_squared, cohort_rate * sigma_squared};
}

bool OutsideCalibratedEpsilonRange(const PrivacyBudget& budget,
                                   double cohort_rate, int64_t rounds) {
  const double n = static_cast<double>(budget.n_clients);
  return budget.epsilon >=
         cohort_rate * cohort_rate * static_cast<double>(rounds) / (n * n);
}

ModelVector GaussianVector(const StreamKey& key, int64_t dimension,
                           double variance) {
  ModelVector out = ModelVector::Zero(dimension);
  if (variance == 0.0) return out;
  const double stddev = std::sqrt(variance);
  RandomStream stream(key);
  for (int64_t j = 0; j < dimension; ++j) {
    out[j] = stddev * stream.NextGaussian();
  }
  return out;
}

}  // namespace dpfed
