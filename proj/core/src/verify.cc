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

#include "dpfed/verify.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpfed/lemmas.h"
#include "dpfed/privacy.h"
#include "dpfed/sharding.h"

namespace dpfed {
namespace {

CheckResult Timed(const std::string& name,
                  const std::function<void(CheckResult*)>& body) {
  CheckResult result;
  result.name = name;
  const auto start = std::chrono::steady_clock::now();
  body(&result);
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

bool RelClose(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

CheckResult CheckSensitivityOperators(uint64_t seed, int64_t samples) {
  return Timed("sensitivity operators", [&](CheckResult* out) {
    constexpr double kTol = 1e-12;
    constexpr int64_t kDims[] = {1, 2, 200};
    RandomStream stream(StreamKey(seed, {{"operators", 0}}));
    int64_t failures = 0;
    int64_t agreement_cases = 0;
    for (int64_t s = 0; s < samples; ++s) {
      const int64_t d = kDims[s % 3];
      const double c = std::exp(4.0 * stream.NextUniform() - 2.0);
      // ||z|| / c log-uniform in [0.1, 10] so the boundary is straddled.
      auto draw = [&]() {
        ModelVector z(d);
        for (int64_t j = 0; j < d; ++j) z[j] = stream.NextGaussian();
        const double target =
            c * std::exp(std::log(100.0) * stream.NextUniform()) / 10.0;
        const double norm = z.norm();
        return norm > 0.0 ? ModelVector(z * (target / norm)) : z;
      };
      const ModelVector a = draw();
      const ModelVector b = draw();
      const ModelVector ca = Clip(a, c);
      const ModelVector cca = Clip(ca, c);
      if ((cca - ca).norm() > kTol * std::max(ca.norm(), c)) ++failures;
      const double lhs = (ca - Clip(b, c)).norm();
      const double gap = (a - b).norm();
      if (lhs > gap + kTol * std::max(gap, c)) ++failures;
      const ModelVector na = Normalize(a, c);
      if (!RelClose(na.norm(), c, kTol)) ++failures;
      if (a.norm() >= c) {
        ++agreement_cases;
        if ((ca - na).cwiseAbs().maxCoeff() > kTol * c) ++failures;
      }
      if (na.norm() < ca.norm() * (1.0 - kTol)) ++failures;
    }
    out->passed = failures == 0;
    out->detail = absl::StrCat(samples, " vectors, ", agreement_cases,
                               " with ||z|| >= c, ", failures, " failures");
  });
}

CheckResult CheckNoiseCalibration(uint64_t seed) {
  return Timed("noise calibration", [&](CheckResult* out) {
    PrivacyBudget budget{5.0, 1e-6, 1.0, 100, 200};
    const int64_t rounds = 500;
    const double c = 1000.0;
    const double sigma2 = *CalibrateNoiseVariance(budget, rounds, c);
    const double r = 100.0;
    const NoiseScale scale = MakeNoiseScale(sigma2, r);
    double sum = 0.0;
    double sum_sq = 0.0;
    int64_t count = 0;
    for (int64_t i = 0; i < 100; ++i) {
      const ModelVector z =
          GaussianVector(StreamKey(seed, {{"noise", 0}, {"client", i}}), 1000,
                         scale.per_client_variance);
      sum += z.sum();
      sum_sq += z.squaredNorm();
      count += z.size();
    }
    const double mean = sum / static_cast<double>(count);
    const double variance = sum_sq / static_cast<double>(count) - mean * mean;
    const double rel = std::abs(variance / scale.per_client_variance - 1.0);
    bool scaling_ok = true;
    for (int64_t k : {1, 7, 500}) {
      for (double cc : {0.5, 3.0, 1000.0}) {
        const double base = *CalibrateNoiseVariance(budget, k, cc);
        scaling_ok &= RelClose(
            *CalibrateNoiseVariance(budget, 2 * k, cc) / base, 2.0, 1e-12);
        scaling_ok &= RelClose(
            *CalibrateNoiseVariance(budget, k, 2 * cc) / base, 4.0, 1e-12);
        PrivacyBudget twice_n = budget;
        twice_n.n_clients *= 2;
        scaling_ok &= RelClose(base / *CalibrateNoiseVariance(twice_n, k, cc),
                               4.0, 1e-12);
        PrivacyBudget twice_eps = budget;
        twice_eps.epsilon *= 2;
        scaling_ok &= RelClose(base / *CalibrateNoiseVariance(twice_eps, k, cc),
                               4.0, 1e-12);
      }
    }
    out->passed = rel <= 0.05 && scaling_ok;
    out->detail = absl::StrFormat(
        "sigma^2 = %.6f, r sigma^2 = %.4f, empirical %.4f (rel err %.4f), "
        "scaling %s",
        sigma2, scale.per_client_variance, variance, rel,
        scaling_ok ? "exact" : "BROKEN");
  });
}

CheckResult CheckGeometricSumGrid() {
  return Timed("geometric-sum grid", [](CheckResult* out) {
    int64_t checked = 0;
    int64_t violations = 0;
    for (int i = 1; i < 1000; ++i) {
      const double x = i * 1e-3;
      for (int64_t m = 1; m <= 250; ++m) {
        if (static_cast<double>(m) * x > 0.25 + 1e-12) break;
        absl::StatusOr<bool> ok = GeometricSumCheck(x, m);
        ++checked;
        if (!ok.ok() || !*ok) ++violations;
      }
    }
    out->passed = violations == 0 && checked > 0;
    out->detail =
        absl::StrCat(checked, " (x, m) pairs, ", violations, " violations");
  });
}

CheckResult CheckLemmas(const BuiltSuite& built, uint64_t seed, int count) {
  return Timed("local-update inequalities", [&](CheckResult* out) {
    const ProblemSuite& suite = built.suite;
    const double L = suite.smoothness_bound;
    const int64_t E = 20;
    RunConfig config;
    config.algorithm = Algorithm::kDPNormFedAvg;
    config.budget =
        PrivacyBudget{5.0, 1e-6, 1.0, suite.size(), suite.dimension};
    config.rounds = 100;
    config.local_steps = E;
    config.cohort_rate = static_cast<double>(suite.size());
    config.schedule.eta0 = 0.003;
    config.policy = SensitivityPolicy::Normalize(50.0);
    config.init =
        MakeInitialPoint(InitRecipe::kI1, *suite.global_optimum, seed);
    config.master_seed = seed;
    config.record_iterates = true;
    absl::StatusOr<IterateTrace> trace = RunFederated(suite, config);
    if (!trace.ok()) {
      out->detail = std::string(trace.status().message());
      return;
    }
    const double etas[] = {0.003, 1.0 / (2.0 * L * E), 1.0 / (2.0 * L),
                           1.0 / L};
    RandomStream pick(StreamKey(seed, {{"lemma_pick", 0}}));
    std::vector<LocalTrajectory> trajectories;
    for (int t = 0; t < count; ++t) {
      LocalTrajectory lt;
      lt.round = static_cast<int64_t>(
          UniformIndex(pick, static_cast<uint64_t>(config.rounds)));
      lt.client = static_cast<int64_t>(
          UniformIndex(pick, static_cast<uint64_t>(suite.size())));
      lt.eta = etas[t % 4];
      absl::StatusOr<LocalResult> local =
          LocalUpdates(suite.clients[static_cast<size_t>(lt.client)],
                       trace->iterates[static_cast<size_t>(lt.round)], lt.eta,
                       E, &lt.points);
      if (!local.ok()) {
        out->detail = std::string(local.status().message());
        return;
      }
      trajectories.push_back(std::move(lt));
    }
    absl::StatusOr<LemmaReport> report = RunLemmaSuite(suite, trajectories, L);
    if (!report.ok()) {
      out->detail = std::string(report.status().message());
      return;
    }
    out->passed = report->ok();
    std::string counts;
    for (const auto& [lemma, n] : report->checked) {
      absl::StrAppend(&counts, " ", lemma, ":", n);
    }
    out->detail = absl::StrCat(count, " trajectories, checked", counts, ", ",
                               report->violations.size(), " violations");
    for (const LemmaViolation& v : report->violations) {
      absl::StrAppend(
          &out->detail,
          absl::StrFormat("; %s k=%d i=%d tau=%d lhs=%.17g "
                          "rhs=%.17g",
                          v.lemma, v.round, v.client, v.step, v.lhs, v.rhs));
      if (out->detail.size() > 2000) break;
    }
  });
}

CheckResult CheckGradientAndSumBounds(const BuiltSuite& built, uint64_t seed) {
  return Timed("gradient-gap and sum-norm bounds", [&](CheckResult* out) {
    const ProblemSuite& suite = built.suite;
    RandomStream stream(StreamKey(seed, {{"facts", 0}}));
    int64_t failures = 0;
    int64_t checked = 0;
    for (int s = 0; s < 200; ++s) {
      const auto i = static_cast<size_t>(
          UniformIndex(stream, static_cast<uint64_t>(suite.size())));
      ModelVector w(suite.dimension);
      const double scale = std::exp(4.0 * stream.NextUniform() - 2.0);
      for (int64_t j = 0; j < w.size(); ++j) {
        w[j] = (*suite.global_optimum)[j] + scale * stream.NextGaussian();
      }
      ++checked;
      if (!GradientGapHolds(suite.clients[i], w, suite.smoothness_bound,
                            (*suite.client_minima)[i])) {
        ++failures;
      }
      std::vector<ModelVector> ys(1 + s % 20, ModelVector(suite.dimension));
      for (ModelVector& y : ys) {
        for (int64_t j = 0; j < y.size(); ++j) y[j] = stream.NextGaussian();
      }
      ++checked;
      if (!SumNormHolds(ys)) ++failures;
    }
    out->passed = failures == 0;
    out->detail = absl::StrCat(checked, " checks, ", failures, " failures");
  });
}

CheckResult CheckReductionToGradientDescent() {
  return Timed("reduction to gradient descent", [](CheckResult* out) {
    QuadraticClient client;
    client.factor = Matrix::Constant(1, 1, 1.5);
    client.optimum = ModelVector::Constant(1, 0.7);
    absl::StatusOr<ProblemSuite> suite = MakeSuite({client});
    if (!suite.ok()) {
      out->detail = std::string(suite.status().message());
      return;
    }
    suite->global_optimum = client.optimum;
    RunConfig config;
    config.algorithm = Algorithm::kFedAvg;
    config.rounds = 100;
    config.local_steps = 1;
    config.cohort_rate = 1.0;
    config.schedule.eta0 = 0.1;
    config.init = ModelVector::Constant(1, 3.0);
    config.record_iterates = true;
    absl::StatusOr<IterateTrace> trace = RunFederated(*suite, config);
    if (!trace.ok()) {
      out->detail = std::string(trace.status().message());
      return;
    }
    double w = 3.0;
    double worst = 0.0;
    for (size_t k = 1; k < trace->iterates.size(); ++k) {
      w -= 0.1 * 2.25 * (w - 0.7);
      worst = std::max(worst, std::abs(trace->iterates[k][0] - w));
    }
    out->passed = trace->iterates.size() == 101 && worst <= 1e-12;
    out->detail =
        absl::StrFormat("100 rounds, max |w_fed - w_gd| = %.3g", worst);
  });
}

std::vector<CheckResult> RunVerification(const VerifyOptions& options) {
  std::vector<CheckResult> results;
  results.push_back(
      CheckSensitivityOperators(options.seed, options.operator_samples));
  results.push_back(CheckNoiseCalibration(options.seed));
  results.push_back(CheckGeometricSumGrid());
  results.push_back(CheckReductionToGradientDescent());
  absl::StatusOr<BuiltSuite> built = BuildSuite(options.suite);
  if (!built.ok()) {
    results.push_back({"suite construction", false,
                       std::string(built.status().message()), 0.0});
    return results;
  }
  results.push_back(
      CheckLemmas(*built, options.seed, options.lemma_trajectories));
  results.push_back(CheckGradientAndSumBounds(*built, options.seed));
  return results;
}

std::string FormatCheck(const CheckResult& result) {
  return absl::StrFormat("%s %s (%.2fs): %s", result.passed ? "PASS" : "FAIL",
                         result.name, result.seconds, result.detail);
}

}  // namespace dpfed
