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

#include "dpfed/lemmas.h"

#include <cmath>

#include "absl/strings/str_cat.h"

namespace dpfed {
namespace {

class Recorder {
 public:
  explicit Recorder(LemmaReport* report) : report_(report) {}

  void Check(const std::string& lemma, const LocalTrajectory& t, int64_t step,
             double lhs, double rhs) {
    ++report_->checked[lemma];
    if (!WithinSlack(lhs, rhs)) {
      report_->violations.push_back({lemma, t.round, t.client, step, lhs, rhs});
    }
  }

  void Skip(const std::string& lemma) { ++report_->skipped[lemma]; }

 private:
  LemmaReport* report_;
};

}  // namespace

absl::StatusOr<LemmaReport> RunLemmaSuite(
    const ProblemSuite& suite, const std::vector<LocalTrajectory>& trajectories,
    double smoothness) {
  if (!suite.global_optimum.has_value() || !suite.heterogeneity.has_value() ||
      !suite.client_minima.has_value() ||
      suite.heterogeneity->size() != suite.clients.size() ||
      suite.client_minima->size() != suite.clients.size()) {
    return absl::FailedPreconditionError(
        "suite needs w*, Delta* and client minima; call Prepare first");
  }
  if (!(smoothness > 0.0)) {
    return absl::InvalidArgumentError("smoothness must be > 0");
  }
  const ModelVector& w_star = *suite.global_optimum;
  const std::vector<double>& minima = *suite.client_minima;
  const std::vector<double>& gaps = *suite.heterogeneity;
  const double L = smoothness;
  LemmaReport report;
  Recorder rec(&report);
  for (const LocalTrajectory& t : trajectories) {
    if (t.client < 0 || t.client >= static_cast<int64_t>(suite.size())) {
      return absl::InvalidArgumentError(
          absl::StrCat("client index ", t.client, " out of range"));
    }
    if (t.points.size() < 2) {
      return absl::InvalidArgumentError("trajectory needs E >= 1 steps");
    }
    const auto i = static_cast<size_t>(t.client);
    const ClientObjective& client = suite.clients[i];
    const int64_t steps = static_cast<int64_t>(t.points.size()) - 1;
    const double eta = t.eta;
    std::vector<ModelVector> grads(t.points.size());
    for (size_t s = 0; s < t.points.size(); ++s) {
      grads[s].resize(t.points[s].size());
      ValueAndGradient(client, t.points[s], &grads[s]);
    }
    const ModelVector& w_k = t.points.front();
    const double gap_k = Value(client, w_k) - minima[i];

    if (eta <= 1.0 / (2.0 * L)) {
      double grad_sq = 0.0;
      for (int64_t s = 0; s < steps; ++s) grad_sq += grads[s].squaredNorm();
      const double lhs = (t.points.back() - w_star).squaredNorm();
      const double rhs = (w_k - w_star).squaredNorm() -
                         eta / (2.0 * L) * grad_sq +
                         2.0 * eta * static_cast<double>(steps) * gaps[i];
      rec.Check("distance", t, steps, lhs, rhs);
    } else {
      rec.Skip("distance");
    }

    if (eta <= 1.0 / L) {
      for (int64_t s = 1; s <= steps; ++s) {
        const double tau = static_cast<double>(s);
        rec.Check("update_norm", t, s, (w_k - t.points[s]).squaredNorm(),
                  2.0 * eta * eta * L * tau * tau * gap_k);
      }
      const double e = static_cast<double>(steps);
      const double u_sq = (w_k - t.points.back()).squaredNorm() / (eta * eta);
      rec.Check("update_norm", t, steps, u_sq, 2.0 * L * e * e * gap_k);
    } else {
      rec.Skip("update_norm");
    }

    for (int64_t s = 0; s < steps; ++s) {
      const double diff = (grads[s + 1] - grads[s]).squaredNorm();
      rec.Check("grad_monotone", t, s, grads[s + 1].squaredNorm(),
                grads[s].squaredNorm() - (2.0 / (eta * L) - 1.0) * diff);
    }

    if (eta <= 1.0 / (2.0 * L * static_cast<double>(steps))) {
      const double g0 = grads.front().norm();
      for (int64_t s = 1; s <= steps; ++s) {
        rec.Check("drift", t, s, (w_k - t.points[s]).norm(),
                  2.0 * eta * static_cast<double>(s) * g0);
      }
    } else {
      rec.Skip("drift");
    }
  }
  return report;
}

bool GradientGapHolds(const ClientObjective& client, const ModelVector& x,
                      double smoothness, double client_minimum) {
  ModelVector g(x.size());
  const double value = ValueAndGradient(client, x, &g);
  return WithinSlack(g.squaredNorm(),
                     2.0 * smoothness * (value - client_minimum));
}

bool SumNormHolds(const std::vector<ModelVector>& vectors) {
  if (vectors.empty()) return true;
  ModelVector sum = ModelVector::Zero(vectors.front().size());
  double squares = 0.0;
  for (const ModelVector& y : vectors) {
    sum += y;
    squares += y.squaredNorm();
  }
  return WithinSlack(sum.squaredNorm(),
                     static_cast<double>(vectors.size()) * squares);
}

absl::StatusOr<bool> GeometricSumCheck(double x, int64_t m) {
  if (!(x > 0.0 && x < 1.0) || m < 1) {
    return absl::InvalidArgumentError("need x in (0, 1) and m >= 1");
  }
  const double md = static_cast<double>(m);
  if (md * x > 0.25 + 1e-12) {
    return absl::OutOfRangeError(
        absl::StrCat("m x = ", md * x, " exceeds 1/4"));
  }
  double lhs = 0.0;
  double power = 1.0;
  for (int64_t j = 0; j < m; ++j) {
    lhs += power;
    power *= 1.0 - x;
  }
  return WithinSlack(lhs, md * (1.0 - 11.0 * (md - 1.0) * x / 24.0));
}

}  // namespace dpfed
