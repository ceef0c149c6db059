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

#include "dpfed/analysis.h"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/strings/str_cat.h"

namespace dpfed {
namespace {

void AppendReal(std::string* out, double value) {
  if (std::isinf(value)) {
    out->append(value > 0 ? "inf" : "-inf");
    return;
  }
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  out->append(buffer, result.ptr);
}

double Mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

// Fixes an eigenvector's sign so its largest-magnitude entry is positive.
ModelVector Canonical(ModelVector v) {
  Eigen::Index at = 0;
  v.cwiseAbs().maxCoeff(&at);
  if (v[at] < 0) v = -v;
  return v;
}

}  // namespace

double Snr(const ModelVector& aggregated_signal,
           const ModelVector& aggregated_noise) {
  const double noise = aggregated_noise.norm();
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return aggregated_signal.norm() / noise;
}

std::string FormatMetricCsv(const std::vector<RoundRecord>& records) {
  std::string out = absl::StrCat(kMetricCsvHeader, "\n");
  for (const RoundRecord& r : records) {
    absl::StrAppend(&out, r.round, ",");
    AppendReal(&out, r.suboptimality);
    out.push_back(',');
    AppendReal(&out, r.snr);
    absl::StrAppend(&out, ",", r.cohort_size, ",");
    AppendReal(&out, r.u_mean);
    out.push_back(',');
    AppendReal(&out, r.u_min);
    out.push_back(',');
    AppendReal(&out, r.u_max);
    out.push_back(',');
    AppendReal(&out, r.clip_active_fraction);
    out.push_back(',');
    AppendReal(&out, r.eta);
    out.push_back('\n');
  }
  return out;
}

std::vector<Point2d> MovingAverage(const std::vector<Point2d>& points,
                                   int window) {
  if (window <= 1) return points;
  const int64_t n = static_cast<int64_t>(points.size());
  const int64_t before = (window - 1) / 2;
  const int64_t after = window - 1 - before;
  std::vector<Point2d> out(points.size());
  for (int64_t t = 0; t < n; ++t) {
    const int64_t lo = std::max<int64_t>(0, t - before);
    const int64_t hi = std::min<int64_t>(n - 1, t + after);
    Point2d sum = {0.0, 0.0};
    for (int64_t s = lo; s <= hi; ++s) {
      sum[0] += points[static_cast<size_t>(s)][0];
      sum[1] += points[static_cast<size_t>(s)][1];
    }
    const double count = static_cast<double>(hi - lo + 1);
    out[static_cast<size_t>(t)] = {sum[0] / count, sum[1] / count};
  }
  return out;
}

absl::StatusOr<TrajectoryProjection> ProjectTrajectories2d(
    const std::vector<std::vector<ModelVector>>& runs,
    const ModelVector& anchor, int smoothing_window) {
  if (runs.empty()) return absl::InvalidArgumentError("no trajectories");
  if (smoothing_window < 1) {
    return absl::InvalidArgumentError("smoothing window must be >= 1");
  }
  const int64_t d = anchor.size();
  Matrix second_moment = Matrix::Zero(d, d);
  for (const auto& run : runs) {
    if (run.size() < 3) {
      return absl::InvalidArgumentError(
          "each trajectory needs at least 3 iterates");
    }
    for (const ModelVector& w : run) {
      if (w.size() != d) {
        return absl::InvalidArgumentError("iterate dimension mismatch");
      }
      const ModelVector centered = w - anchor;
      second_moment.selfadjointView<Eigen::Lower>().rankUpdate(centered);
    }
  }
  second_moment = second_moment.selfadjointView<Eigen::Lower>();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(second_moment);
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  TrajectoryProjection out;
  ModelVector axis1 = ModelVector::Zero(d);
  ModelVector axis2 = ModelVector::Zero(d);
  const double top = values[d - 1];
  if (top > 0.0) axis1 = Canonical(solver.eigenvectors().col(d - 1));
  if (d >= 2 && top > 0.0 && values[d - 2] > 1e-12 * top) {
    axis2 = Canonical(solver.eigenvectors().col(d - 2));
  } else {
    out.degenerate = true;
  }
  for (const auto& run : runs) {
    std::vector<Point2d> projected;
    projected.reserve(run.size());
    for (const ModelVector& w : run) {
      const ModelVector centered = w - anchor;
      projected.push_back({centered.dot(axis1), centered.dot(axis2)});
    }
    out.runs.push_back(MovingAverage(projected, smoothing_window));
  }
  return out;
}

absl::Status CheckTheoremPreconditions(const BoundInputs& inputs) {
  if (!(inputs.rho > 0.0 && inputs.rho < 1.0)) {
    return absl::InvalidArgumentError("rho must lie in (0, 1)");
  }
  if (!(inputs.smoothness > 0.0) || !(inputs.alpha >= 1.0) ||
      !(inputs.gamma > 0.0) || inputs.local_steps < 1) {
    return absl::InvalidArgumentError(
        "need L > 0, alpha >= 1, gamma > 0 and E >= 1");
  }
  const double max_gap = inputs.heterogeneity.empty()
                             ? 0.0
                             : *std::max_element(inputs.heterogeneity.begin(),
                                                 inputs.heterogeneity.end());
  const double c_hat_floor = 4.0 * std::sqrt(inputs.smoothness * max_gap);
  if (inputs.c_hat < c_hat_floor) {
    return absl::FailedPreconditionError(
        absl::StrCat("theorem violation: c_hat = ", inputs.c_hat,
                     " is below 4 sqrt(L max Delta*) = ", c_hat_floor));
  }
  const double e_ceiling = inputs.alpha / (2.0 * inputs.rho);
  if (static_cast<double>(inputs.local_steps) > e_ceiling) {
    return absl::FailedPreconditionError(
        absl::StrCat("theorem violation: E = ", inputs.local_steps,
                     " exceeds alpha / (2 rho) = ", e_ceiling));
  }
  return absl::OkStatus();
}

TheoremSchedule TheoremModeSchedule(double rho, double smoothness, double alpha,
                                    double gamma, double c_hat,
                                    int64_t local_steps) {
  TheoremSchedule out;
  out.eta = rho / (2.0 * alpha * smoothness);
  const double rounds = 2.0 * alpha * gamma /
                        (c_hat * static_cast<double>(local_steps) * rho * rho);
  out.rounds = std::max<int64_t>(1, static_cast<int64_t>(std::ceil(rounds)));
  return out;
}

namespace {

double TermA(const BoundInputs& in) {
  const double d2 = in.init_distance * in.init_distance;
  return in.c_hat * (in.smoothness * d2 / in.gamma + in.gamma / in.smoothness) *
         in.rho;
}

}  // namespace

absl::StatusOr<ClippingBound> ClipBound(const BoundInputs& inputs) {
  if (absl::Status s = CheckTheoremPreconditions(inputs); !s.ok()) return s;
  ClippingBound out;
  out.term_a = TermA(inputs);
  out.term_b =
      (3.0 * static_cast<double>(inputs.local_steps) / (2.0 * inputs.alpha)) *
      Mean(inputs.heterogeneity) * inputs.rho;
  out.rhs = out.term_a + out.term_b;
  return out;
}

double SimplifiedClipBound(const BoundInputs& inputs) {
  return (2.0 * inputs.c_hat * inputs.init_distance +
          1.2 * static_cast<double>(inputs.local_steps) *
              Mean(inputs.heterogeneity)) *
         inputs.rho;
}

absl::StatusOr<RoundObservations> BuildRoundObservations(
    const ProblemSuite& suite, const IterateTrace& trace) {
  if (!suite.global_optimum.has_value()) {
    return absl::FailedPreconditionError("suite has no global optimum");
  }
  const size_t rounds = trace.update_norms.size();
  if (trace.iterates.size() < rounds) {
    return absl::FailedPreconditionError(
        "trace has no recorded iterates; enable record_iterates");
  }
  const size_t n = suite.clients.size();
  std::vector<double> at_optimum(n);
  for (size_t i = 0; i < n; ++i) {
    at_optimum[i] = Value(suite.clients[i], *suite.global_optimum);
  }
  RoundObservations out(rounds, std::vector<ClientRoundObservation>(n));
  for (size_t k = 0; k < rounds; ++k) {
    if (trace.update_norms[k].size() != n) {
      return absl::FailedPreconditionError(absl::StrCat(
          "round ", k, " has ", trace.update_norms[k].size(),
          " client updates; bound checks need full participation"));
    }
    for (const ClientUpdateNorm& entry : trace.update_norms[k]) {
      const auto i = static_cast<size_t>(entry.client);
      out[k][i].update_norm = entry.norm;
      out[k][i].gap =
          Value(suite.clients[i], trace.iterates[k]) - at_optimum[i];
    }
  }
  return out;
}

absl::StatusOr<NormalizationBound> NormBound(
    const BoundInputs& inputs, const RoundObservations& observations) {
  if (absl::Status s = CheckTheoremPreconditions(inputs); !s.ok()) return s;
  if (observations.empty()) {
    return absl::InvalidArgumentError("no rounds observed");
  }
  const double e = static_cast<double>(inputs.local_steps);
  const double threshold = inputs.c_hat * e;
  const double base =
      inputs.c_hat * inputs.c_hat / (2.0 * inputs.alpha * inputs.smoothness);
  const double het_scale = inputs.rho * e / (inputs.alpha * inputs.alpha);
  double clamped = 0.0;
  double indicator = 0.0;
  for (const auto& round : observations) {
    if (round.size() != inputs.heterogeneity.size()) {
      return absl::InvalidArgumentError(
          "observations must cover every client with a Delta*");
    }
    double round_clamped = 0.0;
    double round_indicator = 0.0;
    for (size_t i = 0; i < round.size(); ++i) {
      const double u = round[i].update_norm;
      const bool inside = u <= threshold;
      const double ratio = inside ? (u > 0.0 ? threshold / u : 1.0) : 1.0;
      const double term = base + ratio * inputs.heterogeneity[i] * het_scale;
      round_clamped += term;
      if (inside) round_indicator += term;
    }
    clamped += round_clamped / static_cast<double>(round.size());
    indicator += round_indicator / static_cast<double>(round.size());
  }
  const double rounds = static_cast<double>(observations.size());
  NormalizationBound out;
  out.term_a = TermA(inputs);
  out.het_term = clamped / rounds * e * inputs.rho;
  out.het_term_indicator = indicator / rounds * e * inputs.rho;
  out.rhs = out.term_a + out.het_term;
  return out;
}

double ClipIndicatorHetTerm(const BoundInputs& inputs,
                            const RoundObservations& observations) {
  if (observations.empty()) return 0.0;
  const double e = static_cast<double>(inputs.local_steps);
  const double threshold = inputs.c_hat * e;
  double total = 0.0;
  for (const auto& round : observations) {
    double sum = 0.0;
    for (size_t i = 0; i < round.size(); ++i) {
      if (round[i].update_norm <= threshold) sum += inputs.heterogeneity[i];
    }
    total += sum / static_cast<double>(round.size());
  }
  return (3.0 * e / (2.0 * inputs.alpha)) * inputs.rho * total /
         static_cast<double>(observations.size());
}

double ClipBoundLhs(const BoundInputs& inputs,
                    const RoundObservations& observations) {
  if (observations.empty()) return 0.0;
  const double e = static_cast<double>(inputs.local_steps);
  const double threshold = inputs.c_hat * e;
  const double re = inputs.rho * e / inputs.alpha;
  const double inside_weight = 2.0 - re - re * re;
  const double outside_weight =
      3.0 * inputs.c_hat / (8.0 * inputs.smoothness * e);
  double total = 0.0;
  for (const auto& round : observations) {
    double sum = 0.0;
    for (const ClientRoundObservation& obs : round) {
      sum += obs.update_norm <= threshold ? inside_weight * obs.gap
                                          : outside_weight * obs.update_norm;
    }
    total += sum / static_cast<double>(round.size());
  }
  return total / static_cast<double>(observations.size());
}

double NormBoundLhs(const BoundInputs& inputs,
                    const RoundObservations& observations) {
  if (observations.empty()) return 0.0;
  const double e = static_cast<double>(inputs.local_steps);
  const double threshold = inputs.c_hat * e;
  const double re = inputs.rho * e / inputs.alpha;
  const double inside_weight = 2.0 - re * re;
  const double outside_weight =
      3.0 * inputs.c_hat / (8.0 * inputs.smoothness * e);
  double total = 0.0;
  for (const auto& round : observations) {
    double sum = 0.0;
    for (const ClientRoundObservation& obs : round) {
      if (obs.update_norm > threshold) {
        sum += outside_weight * obs.update_norm;
      } else if (obs.update_norm > 0.0) {
        // At u = 0, w_k minimizes f_i and the term is dropped.
        sum += inside_weight * (threshold / obs.update_norm) * obs.gap;
      }
    }
    total += sum / static_cast<double>(round.size());
  }
  return total / static_cast<double>(observations.size());
}

absl::StatusOr<double> NoClipThreshold(double lipschitz, int64_t local_steps,
                                       double rho, double lambda,
                                       double smoothness) {
  if (!(lipschitz > 0.0) || !(lambda > 0.0) || !(smoothness > 0.0)) {
    return absl::InvalidArgumentError("G, lambda and L must be > 0");
  }
  if (!(rho > 0.0 && rho < 1.0)) {
    return absl::InvalidArgumentError("rho must lie in (0, 1)");
  }
  if (lambda > smoothness) {
    return absl::InvalidArgumentError("lambda must not exceed L");
  }
  if (local_steps < 1 || static_cast<double>(local_steps) > 1.0 / (2.0 * rho)) {
    return absl::OutOfRangeError(
        absl::StrCat("E = ", local_steps, " outside [1, 1 / (2 rho)] = [1, ",
                     1.0 / (2.0 * rho), "]"));
  }
  const double ratio = lambda / smoothness;
  return lipschitz * (1.0 - 11.0 * static_cast<double>(local_steps - 1) * rho *
                                ratio * ratio / 64.0);
}

double EstimateAssumptionLambda(const ProblemSuite& suite, const StreamKey& key,
                                int samples, double eta) {
  double best = std::numeric_limits<double>::infinity();
  const ModelVector center =
      suite.global_optimum.value_or(ModelVector::Zero(suite.dimension));
  ModelVector g(suite.dimension);
  ModelVector g_next(suite.dimension);
  for (int s = 0; s < samples; ++s) {
    RandomStream stream(key.Child("point", s));
    ModelVector w(suite.dimension);
    for (int64_t j = 0; j < w.size(); ++j) {
      w[j] = center[j] + stream.NextGaussian();
    }
    for (const ClientObjective& client : suite.clients) {
      ValueAndGradient(client, w, &g);
      const double gnorm = g.norm();
      if (gnorm == 0.0) continue;
      ValueAndGradient(client, ModelVector(w - eta * g), &g_next);
      best = std::min(best, (g_next - g).norm() / (eta * gnorm));
    }
  }
  return best;
}

}  // namespace dpfed
