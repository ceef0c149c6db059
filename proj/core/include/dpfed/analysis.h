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

#ifndef DPFED_ANALYSIS_H_
#define DPFED_ANALYSIS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpfed/fedopt.h"
#include "dpfed/metrics.h"
#include "dpfed/model_vector.h"
#include "dpfed/objectives.h"
#include "dpfed/random_stream.h"

namespace dpfed {

// ---------------------------------------------------------------------------
// Trajectory projection.

using Point2d = std::array<double, 2>;

struct TrajectoryProjection {
  // One projected, smoothed path per input run.
  std::vector<std::vector<Point2d>> runs;
  // The anchor maps to the origin.
  Point2d anchor = {0.0, 0.0};
  // Set when the centered iterates span fewer than two directions; the
  // second coordinate is then zero.
  bool degenerate = false;
};

// Centers every iterate at `anchor`, projects onto the top two eigenvectors
// of the second-moment matrix of all centered iterates, then applies a
// centered moving average of width `smoothing_window` (truncated at the
// ends). Each run needs at least 3 iterates.
absl::StatusOr<TrajectoryProjection> ProjectTrajectories2d(
    const std::vector<std::vector<ModelVector>>& runs,
    const ModelVector& anchor, int smoothing_window);

// Centered moving average; window 1 is the identity.
std::vector<Point2d> MovingAverage(const std::vector<Point2d>& points,
                                   int window);

// ---------------------------------------------------------------------------
// Closed-form bound terms for the convex convergence results.

struct BoundInputs {
  double smoothness = 1.0;          // L
  std::optional<double> lipschitz;  // G
  std::optional<double> lambda;     // curvature constant of the
                                    // local-steps assumption
  double rho = 0.0;
  double c_hat = 0.0;       // C / E
  int64_t local_steps = 1;  // E
  int64_t rounds = 1;       // K
  double alpha = 1.0;
  double gamma = 1.0;
  double init_distance = 0.0;         // ||w_0 - w*||
  std::vector<double> heterogeneity;  // Delta*_i
};

// Precondition of the clipping and normalization results: c_hat >=
// 4 sqrt(L max Delta*) and E <= alpha / (2 rho). FailedPrecondition names
// the violated one.
absl::Status CheckTheoremPreconditions(const BoundInputs& inputs);

// eta = rho / (2 alpha L) and K = ceil(2 alpha gamma / (c_hat E rho^2)).
struct TheoremSchedule {
  double eta = 0.0;
  int64_t rounds = 0;
};
TheoremSchedule TheoremModeSchedule(double rho, double smoothness, double alpha,
                                    double gamma, double c_hat,
                                    int64_t local_steps);

struct ClippingBound {
  // c_hat (L D^2 / gamma + gamma / L) rho.
  double term_a = 0.0;
  // (3E / 2 alpha) mean(Delta*) rho. The unconditional mean upper-bounds the
  // indicator-weighted expectation.
  double term_b = 0.0;
  double rhs = 0.0;
};
absl::StatusOr<ClippingBound> ClipBound(const BoundInputs& inputs);

// Simplified clipping bound with its constants fixed:
//   (2 c_hat D + (6/5) E mean(Delta*)) rho.
// Reporting only.
double SimplifiedClipBound(const BoundInputs& inputs);

// Per-client, per-round quantities along a run: ||u_k^(i)|| and
// f_i(w_k) - f_i(w*).
struct ClientRoundObservation {
  double update_norm = 0.0;
  double gap = 0.0;
};
// rounds x clients.
using RoundObservations = std::vector<std::vector<ClientRoundObservation>>;

// Requires the iterates w_0 .. w_{K-1} and a full-participation trace (every
// client has an update norm every round).
absl::StatusOr<RoundObservations> BuildRoundObservations(
    const ProblemSuite& suite, const IterateTrace& trace);

struct NormalizationBound {
  double term_a = 0.0;
  // Average over rounds and clients of
  //   [c_hat^2 / (2 alpha L) + s_i Delta*_i rho E / alpha^2] E rho,
  // with s_i = c_hat E / ||u|| when ||u|| <= c_hat E and s_i = 1 otherwise.
  double het_term = 0.0;
  // The same average with the indicator 1(||u|| <= c_hat E) applied instead.
  double het_term_indicator = 0.0;
  double rhs = 0.0;
};
absl::StatusOr<NormalizationBound> NormBound(
    const BoundInputs& inputs, const RoundObservations& observations);

// Indicator-weighted heterogeneity term of the clipping bound, averaged over
// the observed rounds: (3E / 2 alpha) mean_k mean_i 1(||u|| <= c_hat E)
// Delta*_i rho.
double ClipIndicatorHetTerm(const BoundInputs& inputs,
                            const RoundObservations& observations);

// Empirical left-hand sides, averaging over rounds in place of the
// expectation over the uniformly drawn output round.
double ClipBoundLhs(const BoundInputs& inputs,
                    const RoundObservations& observations);
double NormBoundLhs(const BoundInputs& inputs,
                    const RoundObservations& observations);

// c_hat = G (1 - 11 (E - 1) rho lambda^2 / (64 L^2)), the threshold under
// which no clipping happens with alpha = 1. Requires lambda <= L and
// 1 <= E <= 1 / (2 rho).
absl::StatusOr<double> NoClipThreshold(double lipschitz, int64_t local_steps,
                                       double rho, double lambda,
                                       double smoothness);

// Estimates the curvature constant lambda as the minimum over clients and
// sampled points of ||grad f_i(w - eta g) - g|| / (eta ||g||), g =
// grad f_i(w). Points are w* + N(0, 1) draws from key/("point", s).
// Recorded, never asserted.
double EstimateAssumptionLambda(const ProblemSuite& suite, const StreamKey& key,
                                int samples, double eta);

}  // namespace dpfed

#endif  // DPFED_ANALYSIS_H_
