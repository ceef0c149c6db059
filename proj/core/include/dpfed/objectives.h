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

#ifndef DPFED_OBJECTIVES_H_
#define DPFED_OBJECTIVES_H_

#include <cmath>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpfed/model_vector.h"
#include "dpfed/random_stream.h"

namespace dpfed {

// f(w) = 1/2 ||A^T (w - w*)||^2, i.e. Q = A A^T kept in factored form.
struct QuadraticClient {
  Matrix factor;        // d x k
  ModelVector optimum;  // w*_i, dimension d
};

// Softmax cross-entropy over the client's samples plus (l2/2) ||w||^2.
//
// Parameters are laid out class-major: w[c * p + j] is the weight of feature
// j for class c, where p = features.cols(). The model dimension is
// num_classes * p.
struct LogisticClient {
  Matrix features;          // m x p, one sample per row
  std::vector<int> labels;  // m entries in [0, num_classes)
  double l2_coefficient = 0.0;
  int num_classes = 2;
};

using ClientObjective = std::variant<QuadraticClient, LogisticClient>;

int64_t ObjectiveDimension(const ClientObjective& client);

// Unchecked hot path: returns f(w) and writes grad f(w) into *gradient
// (resized as needed). The caller guarantees w has the right dimension.
double ValueAndGradient(const ClientObjective& client, const ModelVector& w,
                        ModelVector* gradient);
double Value(const ClientObjective& client, const ModelVector& w);

struct ValueGrad {
  double value = 0.0;
  ModelVector gradient;
};

// Checked evaluation; InvalidArgument on a dimension mismatch.
absl::StatusOr<ValueGrad> EvalValueGrad(const ClientObjective& client,
                                        const ModelVector& w);

// Per-client smoothness constant. Quadratic: largest eigenvalue of A^T A
// (equal to that of A A^T). Logistic: (1/2) lambda_max(X^T X / m) + l2,
// using the 1/2 bound on the softmax cross-entropy Hessian in the logits.
double ClientSmoothness(const ClientObjective& client);

struct ProblemSuite {
  std::vector<ClientObjective> clients;
  int64_t dimension = 0;
  // Max over clients of ClientSmoothness.
  double smoothness_bound = 0.0;
  std::optional<ModelVector> global_optimum;
  // Delta*_i = f_i(w*) - min f_i, once computed.
  std::optional<std::vector<double>> heterogeneity;
  // min f_i per client, once computed (zero for quadratics).
  std::optional<std::vector<double>> client_minima;

  int64_t size() const { return static_cast<int64_t>(clients.size()); }
};

// Checks clients share the suite dimension and fills smoothness_bound.
absl::StatusOr<ProblemSuite> MakeSuite(std::vector<ClientObjective> clients);

// Synthetic quadratic suite: w*_i has i.i.d. N(0, 1) coordinates and A_i is
// d x factor_rank with i.i.d. N(0, factor_std^2) entries. Client i draws from
// key/("client", i): first the d optimum coordinates, then A_i column-major.
absl::StatusOr<ProblemSuite> GenerateQuadraticSuite(const StreamKey& key,
                                                    int64_t n, int64_t d,
                                                    int64_t factor_rank,
                                                    double factor_std);

// f(w) = (1/n) sum_i f_i(w).
double GlobalValue(const ProblemSuite& suite, const ModelVector& w);
double GlobalValueAndGradient(const ProblemSuite& suite, const ModelVector& w,
                              ModelVector* gradient);

// Minimizer of f with ||grad f(w*)|| <= tolerance.
//
// All-quadratic suites solve (sum Q_i) w = sum Q_i w*_i by conjugate gradient
// on the factored operators, starting from the mean of the client optima (so
// rank-deficient systems keep the component of that point outside the
// range). Other suites use gradient descent with Armijo backtracking.
absl::StatusOr<ModelVector> SolveGlobalOptimum(const ProblemSuite& suite,
                                               double tolerance);

// min_w f_i(w) for every client: 0 for quadratics, a strictly convex solve to
// gradient norm 1e-8 for logistic clients.
absl::StatusOr<std::vector<double>> ClientMinima(const ProblemSuite& suite);

// Delta*_i = f_i(w_star) - min f_i, clamped at 0 from below for round-off.
absl::StatusOr<std::vector<double>> HeterogeneityProfile(
    const ProblemSuite& suite, const ModelVector& w_star);

// Solves for w*, client minima and heterogeneity and stores them in *suite.
absl::Status Prepare(ProblemSuite* suite, double tolerance);

struct DescentOptions {
  double tolerance = 1e-8;
  int64_t max_iterations = 200000;
  // Initial step guess is 1 / smoothness.
  double smoothness = 1.0;
};

// Gradient descent with Armijo backtracking (sufficient decrease 1/2). Trial
// steps after the first use the Barzilai-Borwein length. `objective(w, g)`
// returns f(w) and fills g.
template <typename Objective>
absl::StatusOr<ModelVector> MinimizeWithLineSearch(
    const Objective& objective, ModelVector start,
    const DescentOptions& options);

// Labeled feature matrix, one sample per row.
struct LabeledData {
  Matrix features;
  std::vector<int> labels;
  int num_classes = 0;
};

// Gaussian class clusters: class means have i.i.d. N(0, separation^2)
// coordinates and each sample adds N(0, 1) noise. Samples are ordered by
// class.
LabeledData GenerateClassificationData(const StreamKey& key, int num_classes,
                                       int64_t samples_per_class,
                                       int64_t feature_dim, double separation);

// Appends a constant-one column so the model carries per-class biases.
Matrix WithBiasColumn(const Matrix& features);

// One LogisticClient per index list, sharing l2 and num_classes.
absl::StatusOr<ProblemSuite> MakeLogisticSuite(
    const LabeledData& data,
    const std::vector<std::vector<int64_t>>& client_indices,
    double l2_coefficient);

// Fraction of rows whose argmax logit equals the label.
double ClassificationAccuracy(const Matrix& features,
                              const std::vector<int>& labels, int num_classes,
                              const ModelVector& w);

// ---------------------------------------------------------------------------

template <typename Objective>
absl::StatusOr<ModelVector> MinimizeWithLineSearch(
    const Objective& objective, ModelVector start,
    const DescentOptions& options) {
  ModelVector x = std::move(start);
  ModelVector g(x.size());
  ModelVector trial(x.size());
  ModelVector trial_grad(x.size());
  double value = objective(x, &g);
  double step = 1.0 / options.smoothness;
  for (int64_t it = 0; it < options.max_iterations; ++it) {
    const double gnorm2 = g.squaredNorm();
    if (std::sqrt(gnorm2) <= options.tolerance) return x;
    double t = step;
    double trial_value = 0.0;
    for (int backtracks = 0;; ++backtracks) {
      trial = x - t * g;
      trial_value = objective(trial, &trial_grad);
      if (trial_value <= value - 0.5 * t * gnorm2) break;
      if (backtracks > 200) {
        return absl::InternalError("line search failed to find descent");
      }
      t *= 0.5;
    }
    // Barzilai-Borwein length for the next trial step.
    const ModelVector s = trial - x;
    const ModelVector y = trial_grad - g;
    const double sy = s.dot(y);
    step = sy > 0.0 ? s.squaredNorm() / sy : 1.0 / options.smoothness;
    x.swap(trial);
    g.swap(trial_grad);
    value = trial_value;
  }
  return absl::DeadlineExceededError(
      "gradient descent did not reach the tolerance");
}

}  // namespace dpfed

#endif  // DPFED_OBJECTIVES_H_
