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

#include "dpfed/objectives.h"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>
#include <utility>

#include "absl/strings/str_cat.h"
#include "dpfed/status_macros.h"

namespace dpfed {
namespace {

int64_t ParameterCount(const LogisticClient& c) {
  return static_cast<int64_t>(c.num_classes) * c.features.cols();
}

double QuadraticValueGrad(const QuadraticClient& c, const ModelVector& w,
                          ModelVector* gradient) {
  const Eigen::VectorXd projected = c.factor.transpose() * (w - c.optimum);
  if (gradient != nullptr) gradient->noalias() = c.factor * projected;
  return 0.5 * projected.squaredNorm();
}

double LogisticValueGrad(const LogisticClient& c, const ModelVector& w,
                         ModelVector* gradient) {
  const int64_t m = c.features.rows();
  const int64_t p = c.features.cols();
  const int k = c.num_classes;
  const Eigen::Map<const Matrix> weights(w.data(), p, k);
  Matrix logits = c.features * weights;  // m x k
  double loss = 0.0;
  for (int64_t row = 0; row < m; ++row) {
    const double top = logits.row(row).maxCoeff();
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
      logits(row, j) = std::exp(logits(row, j) - top);
      total += logits(row, j);
    }
    const int label = c.labels[static_cast<size_t>(row)];
    loss += std::log(total) - std::log(logits(row, label));
    logits.row(row) /= total;
    logits(row, label) -= 1.0;
  }
  const double inv_m = m > 0 ? 1.0 / static_cast<double>(m) : 0.0;
  if (gradient != nullptr) {
    gradient->resize(w.size());
    Eigen::Map<Matrix> grad(gradient->data(), p, k);
    grad.noalias() = inv_m * (c.features.transpose() * logits);
    *gradient += c.l2_coefficient * w;
  }
  return loss * inv_m + 0.5 * c.l2_coefficient * w.squaredNorm();
}

double LargestEigenvalueOfGram(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

bool AllQuadratic(const ProblemSuite& suite) {
  return std::all_of(suite.clients.begin(), suite.clients.end(),
                     [](const ClientObjective& c) {
                       return std::holds_alternative<QuadraticClient>(c);
                     });
}

// Applies sum_i A_i A_i^T to v.
ModelVector ApplyHessianSum(const ProblemSuite& suite, const ModelVector& v) {
  ModelVector out = ModelVector::Zero(v.size());
  for (const ClientObjective& c : suite.clients) {
    const auto& q = std::get<QuadraticClient>(c);
    out.noalias() += q.factor * (q.factor.transpose() * v);
  }
  return out;
}

absl::StatusOr<ModelVector> SolveQuadraticByConjugateGradient(
    const ProblemSuite& suite, double tolerance) {
  const int64_t d = suite.dimension;
  const double n = static_cast<double>(suite.size());
  ModelVector rhs = ModelVector::Zero(d);
  ModelVector x = ModelVector::Zero(d);
  for (const ClientObjective& c : suite.clients) {
    const auto& q = std::get<QuadraticClient>(c);
    rhs.noalias() += q.factor * (q.factor.transpose() * q.optimum);
    x += q.optimum;
  }
  x /= n;
  // grad f(x) = (H x - rhs) / n, so the residual target is n * tolerance.
  const double target = n * tolerance;
  ModelVector residual = rhs - ApplyHessianSum(suite, x);
  ModelVector direction = residual;
  double rr = residual.squaredNorm();
  const int64_t max_iterations = 20 * d + 100;
  for (int64_t it = 0; it < max_iterations; ++it) {
    if (std::sqrt(rr) <= target) {
      // Confirm against the true residual; recursive residuals drift.
      residual = rhs - ApplyHessianSum(suite, x);
      rr = residual.squaredNorm();
      if (std::sqrt(rr) <= target) return x;
      direction = residual;
    }
    const ModelVector hp = ApplyHessianSum(suite, direction);
    const double curvature = direction.dot(hp);
    if (!(curvature > 0.0)) break;
    const double alpha = rr / curvature;
    x += alpha * direction;
    residual -= alpha * hp;
    const double rr_next = residual.squaredNorm();
    if ((it + 1) % 50 == 0) {
      residual = rhs - ApplyHessianSum(suite, x);
      direction = residual;
      rr = residual.squaredNorm();
      continue;
    }
    direction = residual + (rr_next / rr) * direction;
    rr = rr_next;
  }
  residual = rhs - ApplyHessianSum(suite, x);
  if (residual.norm() <= target) return x;
  return absl::FailedPreconditionError(
      absl::StrCat("singular system: conjugate gradient stalled with ",
                   "gradient norm ", residual.norm() / n, " > ", tolerance));
}

}  // namespace

int64_t ObjectiveDimension(const ClientObjective& client) {
  return std::visit(
      [](const auto& c) -> int64_t {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, QuadraticClient>) {
          return c.optimum.size();
        } else {
          return ParameterCount(c);
        }
      },
      client);
}

double ValueAndGradient(const ClientObjective& client, const ModelVector& w,
                        ModelVector* gradient) {
  return std::visit(
      [&](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, QuadraticClient>) {
          return QuadraticValueGrad(c, w, gradient);
        } else {
          return LogisticValueGrad(c, w, gradient);
        }
      },
      client);
}

double Value(const ClientObjective& client, const ModelVector& w) {
  return ValueAndGradient(client, w, nullptr);
}

absl::StatusOr<ValueGrad> EvalValueGrad(const ClientObjective& client,
                                        const ModelVector& w) {
  const int64_t d = ObjectiveDimension(client);
  if (w.size() != d) {
    return absl::InvalidArgumentError(absl::StrCat(
        "dimension mismatch: objective has ", d, ", point has ", w.size()));
  }
  ValueGrad out;
  out.value = ValueAndGradient(client, w, &out.gradient);
  return out;
}

double ClientSmoothness(const ClientObjective& client) {
  return std::visit(
      [](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, QuadraticClient>) {
          return LargestEigenvalueOfGram(c.factor);
        } else {
          const double m =
              static_cast<double>(std::max<int64_t>(c.features.rows(), 1));
          return 0.5 * LargestEigenvalueOfGram(c.features) / m +
                 c.l2_coefficient;
        }
      },
      client);
}

absl::StatusOr<ProblemSuite> MakeSuite(std::vector<ClientObjective> clients) {
  if (clients.empty()) {
    return absl::InvalidArgumentError("a suite needs at least one client");
  }
  ProblemSuite suite;
  suite.dimension = ObjectiveDimension(clients.front());
  for (size_t i = 0; i < clients.size(); ++i) {
    if (ObjectiveDimension(clients[i]) != suite.dimension) {
      return absl::InvalidArgumentError(absl::StrCat(
          "client ", i, " has dimension ", ObjectiveDimension(clients[i]),
          ", expected ", suite.dimension));
    }
    suite.smoothness_bound =
        std::max(suite.smoothness_bound, ClientSmoothness(clients[i]));
  }
  suite.clients = std::move(clients);
  return suite;
}

absl::StatusOr<ProblemSuite> GenerateQuadraticSuite(const StreamKey& key,
                                                    int64_t n, int64_t d,
                                                    int64_t factor_rank,
                                                    double factor_std) {
  if (n < 1 || d < 1 || factor_rank < 1) {
    return absl::InvalidArgumentError("n, d and factor_rank must be >= 1");
  }
  if (factor_rank > d) {
    return absl::InvalidArgumentError(absl::StrCat(
        "factor_rank (", factor_rank, ") must not exceed d (", d, ")"));
  }
  if (!(factor_std > 0.0)) {
    return absl::InvalidArgumentError("factor_std must be > 0");
  }
  std::vector<ClientObjective> clients;
  clients.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    RandomStream stream(key.Child("client", i));
    QuadraticClient client;
    client.optimum.resize(d);
    for (int64_t j = 0; j < d; ++j) client.optimum[j] = stream.NextGaussian();
    client.factor.resize(d, factor_rank);
    for (int64_t col = 0; col < factor_rank; ++col) {
      for (int64_t row = 0; row < d; ++row) {
        client.factor(row, col) = factor_std * stream.NextGaussian();
      }
    }
    clients.emplace_back(std::move(client));
  }
  return MakeSuite(std::move(clients));
}

double GlobalValue(const ProblemSuite& suite, const ModelVector& w) {
  double total = 0.0;
  for (const ClientObjective& c : suite.clients) total += Value(c, w);
  return total / static_cast<double>(suite.size());
}

double GlobalValueAndGradient(const ProblemSuite& suite, const ModelVector& w,
                              ModelVector* gradient) {
  double total = 0.0;
  gradient->setZero(w.size());
  ModelVector g(w.size());
  for (const ClientObjective& c : suite.clients) {
    total += ValueAndGradient(c, w, &g);
    *gradient += g;
  }
  const double inv_n = 1.0 / static_cast<double>(suite.size());
  *gradient *= inv_n;
  return total * inv_n;
}

absl::StatusOr<ModelVector> SolveGlobalOptimum(const ProblemSuite& suite,
                                               double tolerance) {
  if (suite.clients.empty()) {
    return absl::InvalidArgumentError("empty suite");
  }
  if (!(tolerance > 0.0)) {
    return absl::InvalidArgumentError("tolerance must be > 0");
  }
  if (AllQuadratic(suite)) {
    return SolveQuadraticByConjugateGradient(suite, tolerance);
  }
  DescentOptions options;
  options.tolerance = tolerance;
  options.smoothness = std::max(suite.smoothness_bound, 1e-12);
  auto objective = [&suite](const ModelVector& w, ModelVector* g) {
    return GlobalValueAndGradient(suite, w, g);
  };
  return MinimizeWithLineSearch(objective, ModelVector::Zero(suite.dimension),
                                options);
}

absl::StatusOr<std::vector<double>> ClientMinima(const ProblemSuite& suite) {
  std::vector<double> minima;
  minima.reserve(suite.clients.size());
  for (const ClientObjective& client : suite.clients) {
    if (std::holds_alternative<QuadraticClient>(client)) {
      minima.push_back(0.0);
      continue;
    }
    DescentOptions options;
    options.tolerance = 1e-8;
    options.smoothness = std::max(ClientSmoothness(client), 1e-12);
    auto objective = [&client](const ModelVector& w, ModelVector* g) {
      return ValueAndGradient(client, w, g);
    };
    ASSIGN_OR_RETURN(
        ModelVector best,
        MinimizeWithLineSearch(
            objective, ModelVector::Zero(ObjectiveDimension(client)), options));
    minima.push_back(Value(client, best));
  }
  return minima;
}

absl::StatusOr<std::vector<double>> HeterogeneityProfile(
    const ProblemSuite& suite, const ModelVector& w_star) {
  if (w_star.size() != suite.dimension) {
    return absl::InvalidArgumentError("w_star dimension mismatch");
  }
  std::vector<double> minima;
  if (suite.client_minima.has_value()) {
    minima = *suite.client_minima;
  } else {
    ASSIGN_OR_RETURN(minima, ClientMinima(suite));
  }
  std::vector<double> gaps(suite.clients.size());
  for (size_t i = 0; i < suite.clients.size(); ++i) {
    gaps[i] = std::max(0.0, Value(suite.clients[i], w_star) - minima[i]);
  }
  return gaps;
}

absl::Status Prepare(ProblemSuite* suite, double tolerance) {
  ASSIGN_OR_RETURN(ModelVector w_star, SolveGlobalOptimum(*suite, tolerance));
  ASSIGN_OR_RETURN(std::vector<double> minima, ClientMinima(*suite));
  suite->client_minima = std::move(minima);
  ASSIGN_OR_RETURN(std::vector<double> gaps,
                   HeterogeneityProfile(*suite, w_star));
  suite->global_optimum = std::move(w_star);
  suite->heterogeneity = std::move(gaps);
  return absl::OkStatus();
}

LabeledData GenerateClassificationData(const StreamKey& key, int num_classes,
                                       int64_t samples_per_class,
                                       int64_t feature_dim, double separation) {
  LabeledData data;
  data.num_classes = num_classes;
  const int64_t total = samples_per_class * num_classes;
  data.features.resize(total, feature_dim);
  data.labels.resize(static_cast<size_t>(total));
  RandomStream mean_stream(key.Child("class_means", 0));
  Matrix means(num_classes, feature_dim);
  for (int c = 0; c < num_classes; ++c) {
    for (int64_t j = 0; j < feature_dim; ++j) {
      means(c, j) = separation * mean_stream.NextGaussian();
    }
  }
  RandomStream sample_stream(key.Child("samples", 0));
  for (int64_t row = 0; row < total; ++row) {
    const int c = static_cast<int>(row / samples_per_class);
    data.labels[static_cast<size_t>(row)] = c;
    for (int64_t j = 0; j < feature_dim; ++j) {
      data.features(row, j) = means(c, j) + sample_stream.NextGaussian();
    }
  }
  return data;
}

Matrix WithBiasColumn(const Matrix& features) {
  Matrix out(features.rows(), features.cols() + 1);
  out.leftCols(features.cols()) = features;
  out.col(features.cols()).setOnes();
  return out;
}

absl::StatusOr<ProblemSuite> MakeLogisticSuite(
    const LabeledData& data,
    const std::vector<std::vector<int64_t>>& client_indices,
    double l2_coefficient) {
  if (data.num_classes < 1) {
    return absl::InvalidArgumentError("num_classes must be >= 1");
  }
  std::vector<ClientObjective> clients;
  clients.reserve(client_indices.size());
  for (const auto& indices : client_indices) {
    LogisticClient client;
    client.num_classes = data.num_classes;
    client.l2_coefficient = l2_coefficient;
    client.features.resize(static_cast<int64_t>(indices.size()),
                           data.features.cols());
    client.labels.reserve(indices.size());
    for (size_t row = 0; row < indices.size(); ++row) {
      const int64_t src = indices[row];
      if (src < 0 || src >= data.features.rows()) {
        return absl::OutOfRangeError(
            absl::StrCat("sample index ", src, " out of range"));
      }
      client.features.row(static_cast<int64_t>(row)) = data.features.row(src);
      client.labels.push_back(data.labels[static_cast<size_t>(src)]);
    }
    clients.emplace_back(std::move(client));
  }
  return MakeSuite(std::move(clients));
}

double ClassificationAccuracy(const Matrix& features,
                              const std::vector<int>& labels, int num_classes,
                              const ModelVector& w) {
  if (features.rows() == 0) return 0.0;
  const Eigen::Map<const Matrix> weights(w.data(), features.cols(),
                                         num_classes);
  const Matrix logits = features * weights;
  int64_t correct = 0;
  for (int64_t row = 0; row < logits.rows(); ++row) {
    Eigen::Index best = 0;
    logits.row(row).maxCoeff(&best);
    if (static_cast<int>(best) == labels[static_cast<size_t>(row)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(features.rows());
}

}  // namespace dpfed
