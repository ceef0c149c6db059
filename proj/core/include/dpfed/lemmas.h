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

#ifndef DPFED_LEMMAS_H_
#define DPFED_LEMMAS_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpfed/model_vector.h"
#include "dpfed/objectives.h"

namespace dpfed {

// Inequality checks for the local-update lemmas, evaluated on recorded
// trajectories. A comparison lhs <= rhs passes when
// lhs <= rhs + kLemmaSlack * max(|lhs|, |rhs|).
inline constexpr double kLemmaSlack = 1e-9;

inline bool WithinSlack(double lhs, double rhs, double slack = kLemmaSlack) {
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  return lhs <= rhs + slack * scale;
}

// One client's local trajectory w_{k,0} = w_k, ..., w_{k,E}.
struct LocalTrajectory {
  int64_t round = 0;
  int64_t client = 0;
  double eta = 0.0;
  std::vector<ModelVector> points;
};

struct LemmaViolation {
  std::string lemma;  // "distance" .. "drift"
  int64_t round = 0;
  int64_t client = 0;
  int64_t step = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct LemmaReport {
  // Inequalities evaluated / trajectories skipped because eta exceeded the
  // lemma's step-size condition, per lemma.
  std::map<std::string, int64_t> checked;
  std::map<std::string, int64_t> skipped;
  std::vector<LemmaViolation> violations;

  bool ok() const { return violations.empty(); }
};

// Checks, along every trajectory whose eta satisfies the lemma's condition:
//   distance (eta <= 1/2L): ||w_{k,E} - w*||^2 <= ||w_k - w*||^2
//        - (eta / 2L) sum_tau ||grad f_i(w_{k,tau})||^2 + 2 eta E Delta*_i
//   update_norm (eta <= 1/L): ||w_k - w_{k,tau}||^2 <= 2 eta^2 L tau^2
//   (f_i(w_k) - f_i*)
//        for tau >= 1, and ||u||^2 <= 2 L E^2 (f_i(w_k) - f_i*)
//   grad_monotone (any eta): ||g_{tau+1}||^2 <= ||g_tau||^2
//        - (2 / (eta L) - 1) ||g_{tau+1} - g_tau||^2
//   drift (eta <= 1/(2LE)): ||w_k - w_{k,tau}|| <= 2 eta tau ||grad f_i(w_k)||
// The suite must carry global_optimum, heterogeneity and client_minima.
absl::StatusOr<LemmaReport> RunLemmaSuite(
    const ProblemSuite& suite, const std::vector<LocalTrajectory>& trajectories,
    double smoothness);

// ||grad h(x)||^2 <= 2 L (h(x) - h*), within kLemmaSlack.
bool GradientGapHolds(const ClientObjective& client, const ModelVector& x,
                      double smoothness, double client_minimum);

// ||sum y_i||^2 <= p sum ||y_i||^2, within kLemmaSlack.
bool SumNormHolds(const std::vector<ModelVector>& vectors);

// Whether (1 - (1-x)^m) / x <= m (1 - 11 (m-1) x / 24). The left side is
// evaluated as the geometric sum sum_{j<m} (1-x)^j. Requires x in (0, 1),
// m >= 1 and m x <= 1/4 (up to 1e-12 for grid round-off).
absl::StatusOr<bool> GeometricSumCheck(double x, int64_t m);

}  // namespace dpfed

#endif  // DPFED_LEMMAS_H_
