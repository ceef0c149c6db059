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

#ifndef DPFED_PRIVACY_H_
#define DPFED_PRIVACY_H_

#include <cstdint>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpfed/model_vector.h"
#include "dpfed/random_stream.h"

namespace dpfed {

struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 1e-5;
  // Absolute constant of the moments-accountant noise formula.
  double q_constant = 1.0;
  int64_t n_clients = 1;
  int64_t dimension = 1;
};

// Checks epsilon > 0, 0 < delta < 1, q > 0, n >= 1, d >= 1. Does not check
// rho < 1; KeyQuantityRho does.
absl::Status ValidateBudget(const PrivacyBudget& budget);

// rho = sqrt(q d ln(1/delta)) / (n epsilon). Fails with InvalidArgument for a
// vacuous budget and with FailedPrecondition ("n too small") when rho >= 1.
absl::StatusOr<double> KeyQuantityRho(const PrivacyBudget& budget);

// Variance of the server-side averaged noise:
//   sigma^2 = q K C^2 ln(1/delta) / (n^2 epsilon^2).
absl::StatusOr<double> CalibrateNoiseVariance(const PrivacyBudget& budget,
                                              int64_t rounds,
                                              double clip_scale);

struct NoiseScale {
  double sigma_squared = 0.0;
  // Variance of each client's noise; r * sigma_squared.
  double per_client_variance = 0.0;
};

NoiseScale MakeNoiseScale(double sigma_squared, double cohort_rate);

// True when epsilon >= r^2 K / n^2, outside the range where the calibration
// above is known to apply (up to an unknown constant). Callers log it.
bool OutsideCalibratedEpsilonRange(const PrivacyBudget& budget,
                                   double cohort_rate, int64_t rounds);

// `dimension` i.i.d. N(0, variance) draws from the stream named by `key`.
ModelVector GaussianVector(const StreamKey& key, int64_t dimension,
                           double variance);

}  // namespace dpfed

#endif  // DPFED_PRIVACY_H_
