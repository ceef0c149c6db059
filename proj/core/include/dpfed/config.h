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

// Flat `key = value` experiment configuration.
//
// One assignment per line; `#` starts a comment. Lists are comma separated.
// Recognized keys and defaults are listed in kConfigKeys; any other key is
// an error that names the line.

#ifndef DPFED_CONFIG_H_
#define DPFED_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "dpfed/fedopt.h"

namespace dpfed {

struct ConfigKeyInfo {
  const char* key;
  const char* default_value;  // empty when the key has no default
  const char* meaning;
};
extern const std::vector<ConfigKeyInfo> kConfigKeys;

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;  // 0 for entries injected by overrides
};

// Raw assignments in file order; later assignments win.
struct ConfigMap {
  std::vector<ConfigEntry> entries;

  const ConfigEntry* Find(std::string_view key) const;
  void Set(std::string_view key, std::string value);
};

absl::StatusOr<ConfigMap> ParseConfigText(std::string_view text);
absl::StatusOr<ConfigMap> ReadConfigFile(const std::string& path);

enum class SuiteKind { kQuadratic, kLogistic };

struct SuiteSpec {
  SuiteKind kind = SuiteKind::kQuadratic;
  int64_t n = 100;
  int64_t dimension = 200;  // quadratic only
  int64_t factor_rank = 20;
  double factor_std = 0.05;
  uint64_t seed = 0;
  // Logistic suites read `features_path` when set and otherwise draw
  // Gaussian class clusters.
  std::string features_path;
  int num_classes = 10;
  int64_t feature_dim = 20;
  int64_t samples_per_class = 100;
  double separation = 0.5;
  int shards_per_client = 5;
  double l2 = 1e-4;
};

struct TheoremMode {
  double alpha = 1.0;
  // Defaults to L ||w_0 - w*|| for the first seed when unset.
  std::optional<double> gamma;
};

struct ExperimentPlan {
  SuiteSpec suite;
  // One run per (variant, seed). Variants share everything except the
  // algorithm tag and the sensitivity policy kind.
  std::vector<Algorithm> variants;
  int64_t rounds = 500;
  int64_t local_steps = 20;
  std::optional<double> cohort_rate;  // defaults to n
  double epsilon = 5.0;
  double delta = 1e-6;
  double q_constant = 1.0;
  double clip_scale = 100.0;
  ScheduleSpec schedule;
  InitRecipe init = InitRecipe::kI1;
  std::vector<uint64_t> seeds = {0};
  bool average_by_actual = false;
  bool record_trace = false;
  bool trajectory = false;
  int smoothing_window = 25;
  int threads = 1;
  std::optional<TheoremMode> theorem;
  std::string output_directory = "out";
};

// Builds a validated plan. Errors name the key and, when known, its line.
absl::StatusOr<ExperimentPlan> BuildPlan(const ConfigMap& config);
absl::StatusOr<ExperimentPlan> LoadPlan(const std::string& path);

// Lowercase short names used in output file names: fedavg, clip, norm.
std::string_view VariantName(Algorithm algorithm);

}  // namespace dpfed

#endif  // DPFED_CONFIG_H_
