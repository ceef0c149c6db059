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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dpfed/experiment.h"
#include "dpfed/metrics.h"
#include "oracle_values.h"

namespace dpfed {
namespace {

BoundInputs UnitInputs() {
  BoundInputs in;
  in.smoothness = 1.0;
  in.rho = 0.1;
  in.c_hat = 1.0;
  in.local_steps = 1;
  in.rounds = 10;
  in.alpha = 1.0;
  in.gamma = 1.0;
  in.init_distance = 1.0;
  in.heterogeneity = {0.0, 0.0};
  return in;
}

TEST(SnrTest, Cases) {
  ModelVector s(2), z(2);
  s << 3, 4;
  z << 0, 0.5;
  EXPECT_DOUBLE_EQ(Snr(s, z), 10.0);
  EXPECT_TRUE(std::isinf(Snr(s, ModelVector::Zero(2))));
  EXPECT_EQ(Snr(ModelVector::Zero(2), z), 0.0);
}

TEST(MetricCsvTest, HeaderAndRows) {
  RoundRecord r;
  r.round = 2;
  r.suboptimality = 0.1;
  r.cohort_size = 5;
  const std::string csv = FormatMetricCsv({r});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kMetricCsvHeader);
  EXPECT_NE(csv.find("\n2,0.1,inf,5,"), std::string::npos);
}

TEST(MovingAverageTest, WindowOneIsIdentity) {
  const std::vector<Point2d> p = {{1, 2}, {3, 5}, {-1, 0}};
  EXPECT_EQ(MovingAverage(p, 1), p);
  const auto smooth = MovingAverage(p, 3);
  EXPECT_DOUBLE_EQ(smooth[1][0], 1.0);
  EXPECT_DOUBLE_EQ(smooth[0][0], 2.0);
}

TEST(ProjectionTest, RankTwoDataKeepsDistances) {
  ModelVector a(5), b(5), anchor(5);
  a << 1, 1, 0, 0, 0;
  b << 0, 0, 1, -1, 0;
  a.normalize();
  b.normalize();
  anchor << 3, -1, 2, 0, 1;
  std::vector<ModelVector> run;
  std::vector<Point2d> plane;
  for (int t = 0; t < 20; ++t) {
    const double x = std::cos(0.3 * t) * 4.0, y = std::sin(0.7 * t);
    run.push_back(anchor + x * a + y * b);
    plane.push_back({x, y});
  }
  const auto proj = ProjectTrajectories2d({run}, anchor, 1);
  ASSERT_TRUE(proj.ok());
  EXPECT_FALSE(proj->degenerate);
  const auto& p = proj->runs[0];
  for (size_t i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(std::hypot(p[i][0], p[i][1]),
                std::hypot(plane[i][0], plane[i][1]), 1e-9);
    for (size_t j = 0; j < i; ++j) {
      EXPECT_NEAR(std::hypot(p[i][0] - p[j][0], p[i][1] - p[j][1]),
                  (run[i] - run[j]).norm(), 1e-9);
    }
  }
}

TEST(ProjectionTest, DegenerateAndTooShort) {
  ModelVector a = ModelVector::Unit(3, 1);
  std::vector<ModelVector> run = {a, 2 * a, 3 * a};
  const auto proj = ProjectTrajectories2d({run}, ModelVector::Zero(3), 1);
  ASSERT_TRUE(proj.ok());
  EXPECT_TRUE(proj->degenerate);
  EXPECT_EQ(proj->runs[0][2][1], 0.0);
  EXPECT_FALSE(ProjectTrajectories2d({{a, a}}, ModelVector::Zero(3), 1).ok());
}

TEST(BoundTest, TermAAndSimplifiedBound) {
  BoundInputs in = UnitInputs();
  const auto b = ClipBound(in);
  ASSERT_TRUE(b.ok());
  EXPECT_NEAR(b->term_a, 0.2, 1e-15);
  EXPECT_EQ(b->term_b, 0.0);
  EXPECT_NEAR(SimplifiedClipBound(in), 0.2, 1e-15);
  in.rho = 0.0;
  EXPECT_EQ(SimplifiedClipBound(in), 0.0);
}

TEST(BoundTest, HeterogeneityTerm) {
  BoundInputs in = UnitInputs();
  in.c_hat = 8.0;
  in.local_steps = 2;
  in.heterogeneity = {1.0, 3.0};
  const auto b = ClipBound(in);
  ASSERT_TRUE(b.ok());
  EXPECT_NEAR(b->term_b, 1.5 * 2.0 * 2.0 * 0.1, 1e-15);
}

TEST(BoundTest, PreconditionsNameTheViolation) {
  BoundInputs in = UnitInputs();
  in.heterogeneity = {1.0};
  const auto small_c = ClipBound(in);
  ASSERT_FALSE(small_c.ok());
  EXPECT_EQ(small_c.status().code(), absl::StatusCode::kFailedPrecondition);
  in = UnitInputs();
  in.local_steps = 6;
  EXPECT_EQ(CheckTheoremPreconditions(in).code(),
            absl::StatusCode::kFailedPrecondition);
  in.local_steps = 5;
  EXPECT_TRUE(CheckTheoremPreconditions(in).ok());
}

TEST(BoundTest, SharedTermAcrossTheorems) {
  BoundInputs in = UnitInputs();
  in.c_hat = 3.0;
  in.gamma = 2.0;
  in.init_distance = 1.5;
  const RoundObservations obs(4, std::vector<ClientRoundObservation>(
                                     2, ClientRoundObservation{10.0, 1.0}));
  const auto t2 = ClipBound(in);
  const auto t4 = NormBound(in, obs);
  ASSERT_TRUE(t2.ok() && t4.ok());
  EXPECT_DOUBLE_EQ(t2->term_a, t4->term_a);
}

TEST(BoundTest, NormBoundContinuousAtThreshold) {
  BoundInputs in = UnitInputs();
  in.c_hat = 4.0;
  in.local_steps = 2;
  in.heterogeneity = {0.5, 0.5};
  auto at = [&](double u) {
    const RoundObservations obs(
        1, std::vector<ClientRoundObservation>(2, {u, 0.0}));
    return *NormBound(in, obs);
  };
  const double threshold = 8.0;
  const auto inside = at(threshold);
  const auto outside = at(std::nextafter(threshold, 100.0));
  EXPECT_NEAR(inside.het_term, outside.het_term, 1e-12);
  EXPECT_GT(inside.het_term_indicator, outside.het_term_indicator);
  EXPECT_GT(at(2.0).het_term, inside.het_term);
  EXPECT_DOUBLE_EQ(at(0.0).het_term, inside.het_term);
}

TEST(BoundTest, TheoremModeSchedule) {
  const TheoremSchedule s = TheoremModeSchedule(0.5, 2.0, 1.0, 3.0, 4.0, 2);
  EXPECT_DOUBLE_EQ(s.eta, 0.125);
  EXPECT_EQ(s.rounds, 3);
}

TEST(NoClipThresholdTest, Values) {
  EXPECT_DOUBLE_EQ(*NoClipThreshold(2.0, 1, 0.1, 0.5, 1.0), 2.0);
  EXPECT_NEAR(*NoClipThreshold(1.0, 2, 0.1, 1.0, 1.0), 0.9828125, 1e-15);
  double previous = 2.0;
  for (int64_t e = 1; e <= 5; ++e) {
    const double c = *NoClipThreshold(2.0, e, 0.1, 0.7, 1.0);
    EXPECT_LE(c, previous);
    previous = c;
  }
  EXPECT_EQ(NoClipThreshold(1.0, 6, 0.1, 1.0, 1.0).status().code(),
            absl::StatusCode::kOutOfRange);
  EXPECT_FALSE(NoClipThreshold(1.0, 2, 0.1, 2.0, 1.0).ok());
}

TEST(SuiteBoundTest, SimplifiedBoundOnDefaultSuite) {
  const auto built = BuildSuite(SuiteSpec{});
  ASSERT_TRUE(built.ok());
  BoundInputs in;
  in.smoothness = built->stats.smoothness;
  in.rho = oracle::kRhoN1000;
  in.c_hat = 12.0;
  in.local_steps = 4;
  in.init_distance = 5.0;
  in.heterogeneity = *built->suite.heterogeneity;
  const double expected =
      (2.0 * 12.0 * 5.0 + 1.2 * 4.0 * oracle::kSuiteFStar) * oracle::kRhoN1000;
  EXPECT_NEAR(SimplifiedClipBound(in), expected, 1e-9 * expected);
  EXPECT_NEAR(built->stats.max_heterogeneity, oracle::kSuiteMaxGap, 1e-8);
}

}  // namespace
}  // namespace dpfed
