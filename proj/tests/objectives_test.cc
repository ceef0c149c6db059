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

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>

#include "dpfed/feature_io.h"
#include "dpfed/lemmas.h"
#include "dpfed/sharding.h"
#include "oracle_values.h"

namespace dpfed {
namespace {

using ::testing::HasSubstr;
using ::testing::StartsWith;

QuadraticClient Scalar(double q, double optimum) {
  QuadraticClient c;
  c.factor = Matrix::Constant(1, 1, std::sqrt(q));
  c.optimum = ModelVector::Constant(1, optimum);
  return c;
}

ModelVector RandomVector(RandomStream& s, int64_t d, double scale = 1.0) {
  ModelVector v(d);
  for (int64_t j = 0; j < d; ++j) v[j] = scale * s.NextGaussian();
  return v;
}

LogisticClient RandomLogistic(RandomStream& s, int64_t m, int64_t p, int k) {
  LogisticClient c;
  c.features.resize(m, p);
  for (int64_t r = 0; r < m; ++r) {
    for (int64_t j = 0; j < p; ++j) c.features(r, j) = s.NextGaussian();
  }
  for (int64_t r = 0; r < m; ++r) {
    c.labels.push_back(static_cast<int>(UniformIndex(s, k)));
  }
  c.num_classes = k;
  c.l2_coefficient = 0.01;
  return c;
}

ProblemSuite DefaultSuite() {
  auto suite = GenerateQuadraticSuite(StreamKey(0), 100, 200, 20, 0.05);
  EXPECT_TRUE(suite.ok());
  EXPECT_TRUE(Prepare(&*suite, 1e-10).ok());
  return *suite;
}

const ProblemSuite& SharedDefaultSuite() {
  static const ProblemSuite* suite = new ProblemSuite(DefaultSuite());
  return *suite;
}

TEST(QuadraticTest, ScalarConstruction) {
  auto suite = GenerateQuadraticSuite(StreamKey(11), 1, 1, 1, 0.5);
  ASSERT_TRUE(suite.ok());
  const auto& c = std::get<QuadraticClient>(suite->clients[0]);
  const double q = c.factor(0, 0) * c.factor(0, 0);
  EXPECT_GE(q, 0.0);
  const ModelVector w = ModelVector::Constant(1, c.optimum[0] + 2.0);
  EXPECT_NEAR(Value(suite->clients[0], w), 0.5 * q * 4.0, 1e-14);
}

TEST(QuadraticTest, GenerationIsDeterministic) {
  auto a = GenerateQuadraticSuite(StreamKey(5), 3, 10, 4, 0.05);
  auto b = GenerateQuadraticSuite(StreamKey(5), 3, 10, 4, 0.05);
  ASSERT_TRUE(a.ok() && b.ok());
  for (int i = 0; i < 3; ++i) {
    const auto& ca = std::get<QuadraticClient>(a->clients[i]);
    const auto& cb = std::get<QuadraticClient>(b->clients[i]);
    EXPECT_EQ(ca.factor, cb.factor);
    EXPECT_EQ(ca.optimum, cb.optimum);
  }
}

TEST(QuadraticTest, RejectsRankAboveDimension) {
  EXPECT_FALSE(GenerateQuadraticSuite(StreamKey(1), 2, 3, 4, 0.1).ok());
}

TEST(QuadraticTest, ValueAndGradientAtOptimumVanish) {
  auto suite = GenerateQuadraticSuite(StreamKey(2), 2, 6, 3, 0.3);
  const auto& c = std::get<QuadraticClient>(suite->clients[1]);
  const auto vg = EvalValueGrad(suite->clients[1], c.optimum);
  ASSERT_TRUE(vg.ok());
  EXPECT_EQ(vg->value, 0.0);
  EXPECT_EQ(vg->gradient, ModelVector::Zero(6));
}

TEST(QuadraticTest, HandArithmetic) {
  const auto vg = EvalValueGrad(Scalar(2.0, 0.0), ModelVector::Constant(1, 3));
  ASSERT_TRUE(vg.ok());
  EXPECT_NEAR(vg->value, 9.0, 1e-14);
  EXPECT_NEAR(vg->gradient[0], 6.0, 1e-14);
}

TEST(ObjectiveTest, DimensionMismatchIsAnError) {
  const auto vg = EvalValueGrad(Scalar(1.0, 0.0), ModelVector::Zero(2));
  EXPECT_EQ(vg.status().code(), absl::StatusCode::kInvalidArgument);
}

TEST(LogisticTest, SingleSampleAtZeroIsLogTwo) {
  LogisticClient c;
  c.features = Matrix::Constant(1, 3, 0.7);
  c.labels = {1};
  c.num_classes = 2;
  const auto vg = EvalValueGrad(c, ModelVector::Zero(6));
  ASSERT_TRUE(vg.ok());
  EXPECT_NEAR(vg->value, std::log(2.0), 1e-15);
}

double CentralDifferenceError(const ClientObjective& c, const ModelVector& w) {
  ModelVector g(w.size());
  ValueAndGradient(c, w, &g);
  ModelVector fd(w.size());
  constexpr double h = 1e-6;
  for (int64_t j = 0; j < w.size(); ++j) {
    ModelVector plus = w, minus = w;
    plus[j] += h;
    minus[j] -= h;
    fd[j] = (Value(c, plus) - Value(c, minus)) / (2 * h);
  }
  return (fd - g).norm() / std::max(g.norm(), 1e-8);
}

TEST(GradientCheck, QuadraticFiniteDifferences) {
  auto suite = GenerateQuadraticSuite(StreamKey(8), 4, 12, 5, 0.4);
  RandomStream s(StreamKey(8, {{"points", 0}}));
  for (int t = 0; t < 100; ++t) {
    const auto& c = suite->clients[static_cast<size_t>(t % 4)];
    EXPECT_LE(CentralDifferenceError(c, RandomVector(s, 12, 2.0)), 1e-5);
  }
}

TEST(GradientCheck, LogisticFiniteDifferences) {
  RandomStream s(StreamKey(9));
  const LogisticClient c = RandomLogistic(s, 15, 4, 3);
  for (int t = 0; t < 100; ++t) {
    EXPECT_LE(CentralDifferenceError(c, RandomVector(s, 12, 1.5)), 1e-5);
  }
}

template <typename Client>
void ExpectConvexAndSmooth(const Client& client, int64_t d, RandomStream& s) {
  const double L = ClientSmoothness(client);
  ModelVector ga(d), gb(d);
  for (int t = 0; t < 100; ++t) {
    const ModelVector a = RandomVector(s, d, 2.0);
    const ModelVector b = RandomVector(s, d, 2.0);
    const double fa = Value(client, a), fb = Value(client, b);
    for (double mix : {0.25, 0.5, 0.75}) {
      EXPECT_LE(Value(client, ModelVector(mix * a + (1 - mix) * b)),
                mix * fa + (1 - mix) * fb + 1e-10);
    }
    ValueAndGradient(client, a, &ga);
    ValueAndGradient(client, b, &gb);
    EXPECT_LE((ga - gb).norm(), L * (a - b).norm() * (1 + 1e-12));
  }
}

TEST(PropertyTest, QuadraticConvexAndSmooth) {
  auto suite = GenerateQuadraticSuite(StreamKey(4), 1, 10, 4, 0.5);
  RandomStream s(StreamKey(4, {{"points", 0}}));
  ExpectConvexAndSmooth(suite->clients[0], 10, s);
}

TEST(PropertyTest, LogisticConvexAndSmooth) {
  RandomStream s(StreamKey(6));
  const LogisticClient c = RandomLogistic(s, 20, 5, 4);
  ExpectConvexAndSmooth(ClientObjective(c), 20, s);
}

TEST(PropertyTest, QuadraticSmoothnessMatchesPowerIteration) {
  auto suite = GenerateQuadraticSuite(StreamKey(3), 1, 30, 6, 0.3);
  const auto& c = std::get<QuadraticClient>(suite->clients[0]);
  const Matrix q = c.factor * c.factor.transpose();
  ModelVector v = ModelVector::Ones(30).normalized();
  double lambda = 0;
  for (int it = 0; it < 5000; ++it) {
    const ModelVector w = q * v;
    lambda = v.dot(w);
    v = w.normalized();
  }
  EXPECT_NEAR(ClientSmoothness(suite->clients[0]), lambda, 1e-10 * lambda);
}

TEST(PropertyTest, FactOneOnRandomPoints) {
  RandomStream s(StreamKey(12));
  auto quad = GenerateQuadraticSuite(StreamKey(12), 1, 8, 3, 0.5);
  const LogisticClient logistic = RandomLogistic(s, 12, 3, 3);
  auto log_suite = MakeSuite({logistic});
  ASSERT_TRUE(Prepare(&*log_suite, 1e-9).ok());
  const double log_min = (*log_suite->client_minima)[0];
  for (int t = 0; t < 100; ++t) {
    EXPECT_TRUE(GradientGapHolds(quad->clients[0], RandomVector(s, 8, 3.0),
                                 ClientSmoothness(quad->clients[0]), 0.0));
    EXPECT_TRUE(GradientGapHolds(logistic, RandomVector(s, 9, 3.0),
                                 ClientSmoothness(logistic), log_min));
  }
}

TEST(GlobalOptimumTest, SingleClient) {
  auto suite = MakeSuite({Scalar(2.0, 1.25)});
  const auto w = SolveGlobalOptimum(*suite, 1e-12);
  ASSERT_TRUE(w.ok());
  EXPECT_NEAR((*w)[0], 1.25, 1e-12);
}

TEST(GlobalOptimumTest, TwoScalarsAndHeterogeneity) {
  auto suite = MakeSuite({Scalar(1.0, 0.0), Scalar(3.0, -2.0)});
  ASSERT_TRUE(Prepare(&*suite, 1e-12).ok());
  EXPECT_NEAR((*suite->global_optimum)[0], -1.5, 1e-12);
  EXPECT_NEAR((*suite->heterogeneity)[0], 1.125, 1e-12);
  EXPECT_NEAR((*suite->heterogeneity)[1], 0.375, 1e-12);
}

TEST(GlobalOptimumTest, HomogeneousSuiteHasNoHeterogeneity) {
  auto one = GenerateQuadraticSuite(StreamKey(21), 1, 5, 5, 0.5);
  auto suite = MakeSuite({one->clients[0], one->clients[0], one->clients[0]});
  ASSERT_TRUE(Prepare(&*suite, 1e-12).ok());
  for (double gap : *suite->heterogeneity) EXPECT_NEAR(gap, 0.0, 1e-20);
}

TEST(GlobalOptimumTest, SingularSystemReported) {
  QuadraticClient c;
  c.factor = Matrix::Zero(3, 1);
  c.factor(0, 0) = 1.0;
  c.optimum = ModelVector::Ones(3);
  QuadraticClient d = c;
  d.optimum = ModelVector::Constant(3, -1.0);
  auto suite = MakeSuite({c, d});
  const auto w = SolveGlobalOptimum(*suite, 1e-12);
  if (!w.ok()) {
    EXPECT_THAT(std::string(w.status().message()),
                HasSubstr("singular system"));
  } else {
    ModelVector g(3);
    GlobalValueAndGradient(*suite, *w, &g);
    EXPECT_LE(g.norm(), 1e-12);
  }
}

TEST(DefaultSuiteTest, MatchesDenseReference) {
  const ProblemSuite& suite = SharedDefaultSuite();
  EXPECT_NEAR(suite.smoothness_bound, oracle::kSuiteSmoothness, 1e-10);
  EXPECT_NEAR(ClientSmoothness(suite.clients[0]),
              oracle::kSuiteClient0Smoothness, 1e-10);
  double lowest = 1e300;
  for (const auto& c : suite.clients)
    lowest = std::min(lowest, ClientSmoothness(c));
  EXPECT_NEAR(lowest, oracle::kSuiteMinClientSmoothness, 1e-10);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR((*suite.global_optimum)[j], oracle::kSuiteWStar[j], 1e-8);
  }
  EXPECT_NEAR(GlobalValue(suite, *suite.global_optimum), oracle::kSuiteFStar,
              1e-8);
  const auto& gaps = *suite.heterogeneity;
  EXPECT_NEAR(*std::max_element(gaps.begin(), gaps.end()), oracle::kSuiteMaxGap,
              1e-8);
  for (double gap : gaps) EXPECT_GE(gap, 0.0);
}

TEST(DefaultSuiteTest, GradientToleranceAndDescentCrossCheck) {
  const ProblemSuite& suite = SharedDefaultSuite();
  ModelVector g(200);
  GlobalValueAndGradient(suite, *suite.global_optimum, &g);
  EXPECT_LE(g.norm(), 1e-10);
  // Plain gradient descent on the dense mean Hessian.
  Matrix h = Matrix::Zero(200, 200);
  ModelVector b = ModelVector::Zero(200);
  for (const auto& client : suite.clients) {
    const auto& c = std::get<QuadraticClient>(client);
    const Matrix q = c.factor * c.factor.transpose();
    h += q / 100.0;
    b += q * c.optimum / 100.0;
  }
  const double top =
      Eigen::SelfAdjointEigenSolver<Matrix>(h).eigenvalues()(199);
  ModelVector w = ModelVector::Zero(200);
  for (int it = 0; it < 20000; ++it) {
    const ModelVector grad = h * w - b;
    if (grad.norm() < 1e-13) break;
    w -= grad / top;
  }
  EXPECT_LE((w - *suite.global_optimum).norm(), 1e-6);
}

TEST(LogisticSuiteTest, MinimaAndHeterogeneity) {
  RandomStream s(StreamKey(31));
  auto suite =
      MakeSuite({RandomLogistic(s, 10, 3, 3), RandomLogistic(s, 10, 3, 3)});
  ASSERT_TRUE(Prepare(&*suite, 1e-8).ok());
  ModelVector g(9);
  GlobalValueAndGradient(*suite, *suite->global_optimum, &g);
  EXPECT_LE(g.norm(), 1e-8);
  for (double gap : *suite->heterogeneity) EXPECT_GE(gap, 0.0);
}

TEST(ShardTest, TwoClassesTwoClients) {
  const std::vector<int> labels = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const auto a = PartitionByLabelShards(labels, 2, 5, StreamKey(1));
  ASSERT_TRUE(a.ok());
  for (const auto& idx : a->client_to_sample_indices) {
    EXPECT_EQ(idx.size(), 5u);
    EXPECT_LE(DistinctClasses(labels, idx), 5);
  }
}

TEST(ShardTest, SingleClientHoldsEverything) {
  const std::vector<int> labels = {2, 0, 1, 1, 0};
  const auto a = PartitionByLabelShards(labels, 1, 5, StreamKey(1));
  ASSERT_TRUE(a.ok());
  EXPECT_EQ(a->client_to_sample_indices[0],
            (std::vector<int64_t>{0, 1, 2, 3, 4}));
}

TEST(ShardTest, ExhaustivePartitionAndClassBound) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    for (int64_t n : {2, 10, 50}) {
      std::vector<int> labels;
      for (int64_t i = 0; i < 5 * n * 7; ++i) {
        labels.push_back(static_cast<int>(i % 10));
      }
      const auto a = PartitionByLabelShards(labels, n, 5, StreamKey(seed));
      ASSERT_TRUE(a.ok());
      std::vector<int> seen(labels.size(), 0);
      for (const auto& idx : a->client_to_sample_indices) {
        EXPECT_LE(DistinctClasses(labels, idx), 5);
        for (int64_t i : idx) ++seen[static_cast<size_t>(i)];
      }
      for (int count : seen) EXPECT_EQ(count, 1);
    }
  }
}

TEST(ShardTest, TruncatesToDivisiblePrefix) {
  std::vector<int> labels(23, 0);
  for (size_t i = 0; i < labels.size(); ++i)
    labels[i] = static_cast<int>(i % 3);
  const auto a = PartitionByLabelShards(labels, 2, 5, StreamKey(2));
  ASSERT_TRUE(a.ok());
  EXPECT_EQ(a->dropped_samples, 3);
  size_t total = 0;
  for (const auto& idx : a->client_to_sample_indices) total += idx.size();
  EXPECT_EQ(total, 20u);
}

TEST(ShardTest, TooFewSamplesIsAnError) {
  EXPECT_FALSE(PartitionByLabelShards({0, 1, 0}, 2, 5, StreamKey(1)).ok());
}

TEST(ShardTest, JsonListsEveryClient) {
  const auto a = PartitionByLabelShards({0, 1, 0, 1}, 2, 2, StreamKey(4));
  const std::string json = ShardAssignmentToJson(*a);
  EXPECT_THAT(json, HasSubstr("\"0\""));
  EXPECT_THAT(json, HasSubstr("\"1\""));
}

TEST(FeatureIoTest, ParsesSmallCsv) {
  const auto data = ParseFeatureCsv("2,2\n2\n1,2,0\n3,4,1\n");
  ASSERT_TRUE(data.ok());
  EXPECT_EQ(data->features, (Matrix(2, 2) << 1, 2, 3, 4).finished());
  EXPECT_EQ(data->labels, (std::vector<int>{0, 1}));
  EXPECT_EQ(data->num_classes, 2);
}

TEST(FeatureIoTest, EmptyFileNamesOffset) {
  const auto data = ParseFeatureCsv("");
  EXPECT_EQ(data.status().code(), absl::StatusCode::kInvalidArgument);
  EXPECT_THAT(std::string(data.status().message()), StartsWith("byte 0"));
}

TEST(FeatureIoTest, RejectsBadInputs) {
  EXPECT_THAT(ParseFeatureCsv("1,1\n2\nnan,0\n").status().message(),
              HasSubstr("non-finite"));
  EXPECT_THAT(ParseFeatureCsv("1,1\n2\n1.0,5\n").status().message(),
              HasSubstr("out of range"));
  EXPECT_THAT(std::string(ParseFeatureCsv("x\n").status().message()),
              HasSubstr("malformed header"));
  EXPECT_THAT(std::string(ParseFeatureBinary("nope").status().message()),
              HasSubstr("DPFS1"));
}

TEST(FeatureIoTest, RoundTripIsExact) {
  const LabeledData data =
      GenerateClassificationData(StreamKey(17), 4, 9, 6, 1.3);
  for (FeatureFormat f : {FeatureFormat::kCsv, FeatureFormat::kBinary}) {
    const auto path =
        std::filesystem::temp_directory_path() /
        ("dpfed_roundtrip_" + std::to_string(static_cast<int>(f)));
    ASSERT_TRUE(WriteFeatureMatrix(path.string(), data, f).ok());
    const auto back = LoadFeatureMatrix(path.string(), FeatureFormat::kAuto);
    ASSERT_TRUE(back.ok()) << back.status();
    EXPECT_EQ(back->features, data.features);
    EXPECT_EQ(back->labels, data.labels);
    EXPECT_EQ(back->num_classes, data.num_classes);
    std::filesystem::remove(path);
  }
}

TEST(FeatureIoTest, MissingFile) {
  EXPECT_FALSE(
      LoadFeatureMatrix("/nonexistent/dpfed.csv", FeatureFormat::kAuto).ok());
}

}  // namespace
}  // namespace dpfed
