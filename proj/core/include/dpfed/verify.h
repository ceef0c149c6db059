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

// Numerical property suites behind the `verify` command.

#ifndef DPFED_VERIFY_H_
#define DPFED_VERIFY_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dpfed/experiment.h"

namespace dpfed {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Clip idempotence and nonexpansiveness, normalize norm-exactness and
// clip == normalize for ||z|| >= c on `samples` random vectors spread over
// dimensions {1, 2, 200}.
CheckResult CheckSensitivityOperators(uint64_t seed, int64_t samples);

// Empirical variance of 100 client noise vectors of 1000 coordinates against
// r sigma^2, plus exact scaling of sigma^2 in K, C, n and epsilon.
CheckResult CheckNoiseCalibration(uint64_t seed);

// The geometric-sum inequality over x = 0.001, 0.002, ... and 1 <= m <= 250
// with m x <= 1/4.
CheckResult CheckGeometricSumGrid();

// The local-update inequalities along `count` local trajectories sampled from a
// short private run on `built`. Step sizes rotate through the lemmas' limits.
CheckResult CheckLemmas(const BuiltSuite& built, uint64_t seed, int count);

// The gradient-gap and sum-norm bounds at random points of `built`.
CheckResult CheckGradientAndSumBounds(const BuiltSuite& built, uint64_t seed);

// A single client with r = 1, E = 1, no noise and no sensitivity bound
// against a plain gradient-descent loop on a 1-D quadratic, 100 rounds.
CheckResult CheckReductionToGradientDescent();

struct VerifyOptions {
  uint64_t seed = 0;
  int64_t operator_samples = 100000;
  int lemma_trajectories = 100;
  SuiteSpec suite;  // defaults to the 100 x 200 synthetic suite
};

std::vector<CheckResult> RunVerification(const VerifyOptions& options);

// "PASS <name> (<seconds>s): <detail>" or FAIL.
std::string FormatCheck(const CheckResult& result);

}  // namespace dpfed

#endif  // DPFED_VERIFY_H_
