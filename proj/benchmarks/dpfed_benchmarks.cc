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

#include <benchmark/benchmark.h>

#include "dpfed/fedopt.h"
#include "dpfed/objectives.h"
#include "dpfed/privacy.h"
#include "dpfed/random_stream.h"

namespace dpfed {
namespace {

ProblemSuite BenchSuite(int64_t n) {
  return *GenerateQuadraticSuite(StreamKey(0), n, 200, 20, 0.05);
}

void BM_LocalUpdates(benchmark::State& state) {
  const ProblemSuite suite = BenchSuite(1);
  const ModelVector w = ModelVector::Ones(200);
  for (auto _ : state) {
    auto r = LocalUpdates(suite.clients[0], w, 0.003, state.range(0));
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LocalUpdates)->Arg(1)->Arg(20);

void BM_Clip(benchmark::State& state) {
  const ModelVector z = GaussianVector(StreamKey(1), state.range(0), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(Clip(z, 0.5));
}
BENCHMARK(BM_Clip)->Arg(200)->Arg(2100);

void BM_Normalize(benchmark::State& state) {
  const ModelVector z = GaussianVector(StreamKey(1), state.range(0), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(Normalize(z, 0.5));
}
BENCHMARK(BM_Normalize)->Arg(200)->Arg(2100);

void BM_GaussianVector(benchmark::State& state) {
  int64_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        GaussianVector(StreamKey(2, {{"noise", k++}}), state.range(0), 1.0));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GaussianVector)->Arg(200);

void BM_PrivateRound(benchmark::State& state) {
  ProblemSuite suite = BenchSuite(100);
  RunConfig config;
  config.algorithm = Algorithm::kDPNormFedAvg;
  config.budget = PrivacyBudget{5.0, 1e-6, 1.0, 100, 200};
  config.rounds = 1;
  config.local_steps = 20;
  config.cohort_rate = 100;
  config.schedule.eta0 = 0.003;
  config.policy = SensitivityPolicy::Normalize(50.0);
  config.init = ModelVector::Ones(200);
  for (auto _ : state) benchmark::DoNotOptimize(RunFederated(suite, config));
}
BENCHMARK(BM_PrivateRound)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dpfed

BENCHMARK_MAIN();
