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

#include "dpfed/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "dpfed/status_macros.h"

namespace dpfed {

const std::vector<ConfigKeyInfo> kConfigKeys = {
    {"suite", "quadratic", "quadratic | logistic"},
    {"n", "100", "number of clients"},
    {"d", "200", "model dimension (quadratic suites)"},
    {"factor_rank", "20", "columns of each quadratic factor A_i"},
    {"factor_std", "0.05", "std of the entries of A_i"},
    {"suite_seed", "0", "seed of the problem suite"},
    {"features", "", "feature file (CSV or DPFS1 binary) for logistic suites"},
    {"num_classes", "10", "classes of generated logistic data"},
    {"feature_dim", "20", "feature dimension of generated logistic data"},
    {"samples_per_class", "100", "samples per class of generated data"},
    {"separation", "0.5", "distance scale between generated class means"},
    {"shards_per_client", "5", "label shards dealt to each client"},
    {"l2", "1e-4", "weight decay of logistic clients"},
    {"algorithm", "DPNormFedAvg",
     "comma list of FedAvg | DPFedAvgClip | "
     "DPNormFedAvg (or fedavg | clip | norm)"},
    {"K", "500", "rounds"},
    {"E", "20", "local steps"},
    {"r", "n", "expected cohort size"},
    {"epsilon", "5", "privacy epsilon"},
    {"delta", "1e-6", "privacy delta"},
    {"q", "1", "constant of the noise calibration"},
    {"C", "100", "clipping threshold / normalization scale"},
    {"eta0", "0.01", "initial local step size"},
    {"decay", "1", "per-round step-size multiplier"},
    {"momentum", "0", "server heavy-ball momentum"},
    {"beta_equals_eta", "true", "use the local step size at the server"},
    {"beta0", "0.01", "initial server step size when beta_equals_eta=false"},
    {"constant_eta", "", "constant step size overriding eta0 and decay"},
    {"init", "I1", "I1 | I2 | zero"},
    {"seeds", "0", "comma list of master seeds (alias: seed)"},
    {"average_by_actual", "false", "divide the aggregate by |S_k|"},
    {"record_trace", "false", "write per-run trace JSON"},
    {"trajectory", "false", "write 2-D projections of the first seed"},
    {"smoothing_window", "25", "moving-average width of projections"},
    {"threads", "1", "worker threads per round"},
    {"theorem_mode", "false", "derive eta and K from the convex theorems"},
    {"theorem_alpha", "1", "alpha of theorem mode"},
    {"theorem_gamma", "", "gamma of theorem mode (default L ||w_0 - w*||)"},
    {"out", "out", "output directory"},
};

const ConfigEntry* ConfigMap::Find(std::string_view key) const {
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    if (it->key == key) return &*it;
  }
  return nullptr;
}

void ConfigMap::Set(std::string_view key, std::string value) {
  entries.push_back({std::string(key), std::move(value), 0});
}

absl::StatusOr<ConfigMap> ParseConfigText(std::string_view text) {
  std::set<std::string> known;
  for (const ConfigKeyInfo& info : kConfigKeys) known.insert(info.key);
  known.insert("seed");
  ConfigMap out;
  int line_number = 0;
  for (absl::string_view raw :
       absl::StrSplit(absl::string_view(text.data(), text.size()), '\n')) {
    ++line_number;
    absl::string_view line = raw;
    if (const size_t hash = line.find('#'); hash != line.npos) {
      line = line.substr(0, hash);
    }
    line = absl::StripAsciiWhitespace(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == line.npos) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_number, ": expected key = value"));
    }
    const std::string key(absl::StripAsciiWhitespace(line.substr(0, eq)));
    const std::string value(absl::StripAsciiWhitespace(line.substr(eq + 1)));
    if (!known.count(key)) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_number, ": unknown key `", key, "`"));
    }
    if (value.empty()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line_number, ": key `", key, "` has an empty value"));
    }
    out.entries.push_back({key, value, line_number});
  }
  return out;
}

absl::StatusOr<ConfigMap> ReadConfigFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream contents;
  contents << in.rdbuf();
  return ParseConfigText(contents.str());
}

std::string_view VariantName(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kFedAvg:
      return "fedavg";
    case Algorithm::kDPFedAvgClip:
      return "clip";
    case Algorithm::kDPNormFedAvg:
      return "norm";
  }
  return "unknown";
}

namespace {

class Reader {
 public:
  explicit Reader(const ConfigMap& config) : config_(config) {}

  absl::Status Error(std::string_view key, absl::string_view message) const {
    const ConfigEntry* entry = config_.Find(key);
    const std::string where = entry != nullptr && entry->line > 0
                                  ? absl::StrCat("line ", entry->line, ": ")
                                  : std::string();
    return absl::InvalidArgumentError(
        absl::StrCat(where, "key `", std::string(key), "`: ", message));
  }

  absl::Status Int(std::string_view key, int64_t* out) const {
    const ConfigEntry* entry = config_.Find(key);
    if (entry == nullptr) return absl::OkStatus();
    const std::string& v = entry->value;
    int64_t value = 0;
    const auto [ptr, ec] =
        std::from_chars(v.data(), v.data() + v.size(), value);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      return Error(key, absl::StrCat("expected an integer, got '", v, "'"));
    }
    *out = value;
    return absl::OkStatus();
  }

  absl::Status Int(std::string_view key, int* out) const {
    int64_t wide = *out;
    RETURN_IF_ERROR(Int(key, &wide));
    *out = static_cast<int>(wide);
    return absl::OkStatus();
  }

  absl::Status Real(std::string_view key, double* out) const {
    const ConfigEntry* entry = config_.Find(key);
    if (entry == nullptr) return absl::OkStatus();
    return ParseReal(key, entry->value, out);
  }

  absl::Status Bool(std::string_view key, bool* out) const {
    const ConfigEntry* entry = config_.Find(key);
    if (entry == nullptr) return absl::OkStatus();
    const std::string v = absl::AsciiStrToLower(entry->value);
    if (v == "true" || v == "1" || v == "yes") {
      *out = true;
    } else if (v == "false" || v == "0" || v == "no") {
      *out = false;
    } else {
      return Error(
          key, absl::StrCat("expected a boolean, got '", entry->value, "'"));
    }
    return absl::OkStatus();
  }

  absl::Status Text(std::string_view key, std::string* out) const {
    if (const ConfigEntry* entry = config_.Find(key)) *out = entry->value;
    return absl::OkStatus();
  }

  absl::Status ParseReal(std::string_view key, const std::string& v,
                         double* out) const {
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(v.data(), v.data() + v.size(), value);
    if (ec != std::errc() || ptr != v.data() + v.size() ||
        !std::isfinite(value)) {
      return Error(key, absl::StrCat("expected a finite real, got '", v, "'"));
    }
    *out = value;
    return absl::OkStatus();
  }

  std::vector<std::string> List(std::string_view key) const {
    std::vector<std::string> items;
    const ConfigEntry* entry = config_.Find(key);
    if (entry == nullptr) return items;
    for (absl::string_view item : absl::StrSplit(entry->value, ',')) {
      item = absl::StripAsciiWhitespace(item);
      if (!item.empty()) items.emplace_back(item);
    }
    return items;
  }

  bool Has(std::string_view key) const { return config_.Find(key) != nullptr; }

 private:
  const ConfigMap& config_;
};

absl::StatusOr<Algorithm> ParseVariant(const std::string& name) {
  const std::string lower = absl::AsciiStrToLower(name);
  if (lower == "fedavg") return Algorithm::kFedAvg;
  if (lower == "clip" || lower == "dpfedavgclip") {
    return Algorithm::kDPFedAvgClip;
  }
  if (lower == "norm" || lower == "dpnormfedavg") {
    return Algorithm::kDPNormFedAvg;
  }
  return ParseAlgorithm(name);
}

}  // namespace

absl::StatusOr<ExperimentPlan> BuildPlan(const ConfigMap& config) {
  Reader read(config);
  ExperimentPlan plan;

  std::string suite_kind = "quadratic";
  RETURN_IF_ERROR(read.Text("suite", &suite_kind));
  if (suite_kind == "quadratic") {
    plan.suite.kind = SuiteKind::kQuadratic;
  } else if (suite_kind == "logistic") {
    plan.suite.kind = SuiteKind::kLogistic;
  } else {
    return read.Error("suite", "expected quadratic or logistic");
  }
  SuiteSpec& s = plan.suite;
  RETURN_IF_ERROR(read.Int("n", &s.n));
  RETURN_IF_ERROR(read.Int("d", &s.dimension));
  RETURN_IF_ERROR(read.Int("factor_rank", &s.factor_rank));
  RETURN_IF_ERROR(read.Real("factor_std", &s.factor_std));
  int64_t suite_seed = 0;
  RETURN_IF_ERROR(read.Int("suite_seed", &suite_seed));
  if (suite_seed < 0) return read.Error("suite_seed", "must be >= 0");
  s.seed = static_cast<uint64_t>(suite_seed);
  RETURN_IF_ERROR(read.Text("features", &s.features_path));
  RETURN_IF_ERROR(read.Int("num_classes", &s.num_classes));
  RETURN_IF_ERROR(read.Int("feature_dim", &s.feature_dim));
  RETURN_IF_ERROR(read.Int("samples_per_class", &s.samples_per_class));
  RETURN_IF_ERROR(read.Real("separation", &s.separation));
  RETURN_IF_ERROR(read.Int("shards_per_client", &s.shards_per_client));
  RETURN_IF_ERROR(read.Real("l2", &s.l2));
  if (s.n < 1) return read.Error("n", "must be >= 1");
  if (s.dimension < 1) return read.Error("d", "must be >= 1");
  if (s.factor_rank < 1 || s.factor_rank > s.dimension) {
    return read.Error("factor_rank", "must lie in [1, d]");
  }
  if (!(s.factor_std > 0.0)) return read.Error("factor_std", "must be > 0");
  if (s.num_classes < 2) return read.Error("num_classes", "must be >= 2");
  if (s.feature_dim < 1) return read.Error("feature_dim", "must be >= 1");
  if (s.samples_per_class < 1) {
    return read.Error("samples_per_class", "must be >= 1");
  }
  if (s.shards_per_client < 1) {
    return read.Error("shards_per_client", "must be >= 1");
  }
  if (!(s.l2 >= 0.0)) return read.Error("l2", "must be >= 0");

  plan.variants.clear();
  const std::vector<std::string> names = read.List("algorithm");
  for (const std::string& name : names) {
    absl::StatusOr<Algorithm> algorithm = ParseVariant(name);
    if (!algorithm.ok()) {
      return read.Error("algorithm", algorithm.status().message());
    }
    if (std::find(plan.variants.begin(), plan.variants.end(), *algorithm) !=
        plan.variants.end()) {
      return read.Error("algorithm", absl::StrCat("duplicate variant ", name));
    }
    plan.variants.push_back(*algorithm);
  }
  if (plan.variants.empty()) plan.variants = {Algorithm::kDPNormFedAvg};

  RETURN_IF_ERROR(read.Int("K", &plan.rounds));
  RETURN_IF_ERROR(read.Int("E", &plan.local_steps));
  if (plan.rounds < 1) return read.Error("K", "must be >= 1");
  if (plan.local_steps < 1) return read.Error("E", "must be >= 1");
  if (read.Has("r")) {
    double r = 0.0;
    RETURN_IF_ERROR(read.Real("r", &r));
    if (!(r >= 1.0 && r <= static_cast<double>(s.n))) {
      return read.Error("r", "must lie in [1, n]");
    }
    plan.cohort_rate = r;
  }
  RETURN_IF_ERROR(read.Real("epsilon", &plan.epsilon));
  RETURN_IF_ERROR(read.Real("delta", &plan.delta));
  RETURN_IF_ERROR(read.Real("q", &plan.q_constant));
  RETURN_IF_ERROR(read.Real("C", &plan.clip_scale));
  if (!(plan.epsilon > 0.0)) return read.Error("epsilon", "must be > 0");
  if (!(plan.delta > 0.0 && plan.delta < 1.0)) {
    return read.Error("delta", "must lie in (0, 1)");
  }
  if (!(plan.q_constant > 0.0)) return read.Error("q", "must be > 0");
  if (!(plan.clip_scale > 0.0)) return read.Error("C", "must be > 0");

  ScheduleSpec& sched = plan.schedule;
  RETURN_IF_ERROR(read.Real("eta0", &sched.eta0));
  RETURN_IF_ERROR(read.Real("decay", &sched.decay));
  RETURN_IF_ERROR(read.Real("momentum", &sched.server_momentum));
  RETURN_IF_ERROR(read.Bool("beta_equals_eta", &sched.beta_equals_eta));
  RETURN_IF_ERROR(read.Real("beta0", &sched.beta0));
  if (read.Has("constant_eta")) {
    double eta = 0.0;
    RETURN_IF_ERROR(read.Real("constant_eta", &eta));
    if (!(eta > 0.0)) return read.Error("constant_eta", "must be > 0");
    sched.constant_override = eta;
  }
  if (!(sched.eta0 > 0.0)) return read.Error("eta0", "must be > 0");
  if (!(sched.decay > 0.0 && sched.decay <= 1.0)) {
    return read.Error("decay", "must lie in (0, 1]");
  }
  if (!(sched.server_momentum >= 0.0 && sched.server_momentum < 1.0)) {
    return read.Error("momentum", "must lie in [0, 1)");
  }
  if (!(sched.beta0 > 0.0)) return read.Error("beta0", "must be > 0");

  std::string init = "I1";
  RETURN_IF_ERROR(read.Text("init", &init));
  absl::StatusOr<InitRecipe> recipe = ParseInitRecipe(init);
  if (!recipe.ok()) return read.Error("init", recipe.status().message());
  plan.init = *recipe;

  const char* seed_key = read.Has("seeds") ? "seeds" : "seed";
  if (read.Has(seed_key)) {
    plan.seeds.clear();
    for (const std::string& item : read.List(seed_key)) {
      uint64_t seed = 0;
      const auto [ptr, ec] =
          std::from_chars(item.data(), item.data() + item.size(), seed);
      if (ec != std::errc() || ptr != item.data() + item.size()) {
        return read.Error(
            seed_key,
            absl::StrCat("expected unsigned integers, got '", item, "'"));
      }
      if (std::find(plan.seeds.begin(), plan.seeds.end(), seed) !=
          plan.seeds.end()) {
        return read.Error(seed_key, absl::StrCat("duplicate seed ", item));
      }
      plan.seeds.push_back(seed);
    }
    if (plan.seeds.empty()) return read.Error(seed_key, "no seeds given");
  }

  RETURN_IF_ERROR(read.Bool("average_by_actual", &plan.average_by_actual));
  RETURN_IF_ERROR(read.Bool("record_trace", &plan.record_trace));
  RETURN_IF_ERROR(read.Bool("trajectory", &plan.trajectory));
  RETURN_IF_ERROR(read.Int("smoothing_window", &plan.smoothing_window));
  RETURN_IF_ERROR(read.Int("threads", &plan.threads));
  if (plan.smoothing_window < 1) {
    return read.Error("smoothing_window", "must be >= 1");
  }
  if (plan.threads < 1) return read.Error("threads", "must be >= 1");
  if (plan.trajectory && plan.rounds < 2) {
    return read.Error("trajectory", "needs K >= 2");
  }

  bool theorem_mode = false;
  RETURN_IF_ERROR(read.Bool("theorem_mode", &theorem_mode));
  if (theorem_mode) {
    TheoremMode mode;
    RETURN_IF_ERROR(read.Real("theorem_alpha", &mode.alpha));
    if (!(mode.alpha >= 1.0)) {
      return read.Error("theorem_alpha", "must be >= 1");
    }
    if (read.Has("theorem_gamma")) {
      double gamma = 0.0;
      RETURN_IF_ERROR(read.Real("theorem_gamma", &gamma));
      if (!(gamma > 0.0)) return read.Error("theorem_gamma", "must be > 0");
      mode.gamma = gamma;
    }
    if (sched.server_momentum != 0.0) {
      return read.Error("momentum", "must be 0 in theorem mode");
    }
    if (plan.cohort_rate.has_value() &&
        *plan.cohort_rate != static_cast<double>(s.n)) {
      return read.Error("r", "theorem mode needs full participation (r = n)");
    }
    for (Algorithm a : plan.variants) {
      if (a == Algorithm::kFedAvg) {
        return read.Error("algorithm",
                          "theorem mode applies to private variants only");
      }
    }
    plan.theorem = mode;
  }
  RETURN_IF_ERROR(read.Text("out", &plan.output_directory));

  // Private variants need a non-vacuous budget before any run starts.
  const bool any_private =
      std::any_of(plan.variants.begin(), plan.variants.end(),
                  [](Algorithm a) { return a != Algorithm::kFedAvg; });
  if (any_private) {
    PrivacyBudget budget;
    budget.epsilon = plan.epsilon;
    budget.delta = plan.delta;
    budget.q_constant = plan.q_constant;
    budget.n_clients = s.n;
    budget.dimension = s.kind == SuiteKind::kQuadratic
                           ? s.dimension
                           : (s.feature_dim + 1) * s.num_classes;
    if (s.kind == SuiteKind::kLogistic && !s.features_path.empty()) {
      // Dimension depends on the file; checked again once it is loaded.
    } else if (absl::StatusOr<double> rho = KeyQuantityRho(budget); !rho.ok()) {
      return read.Error("n", rho.status().message());
    }
  }
  return plan;
}

absl::StatusOr<ExperimentPlan> LoadPlan(const std::string& path) {
  ASSIGN_OR_RETURN(ConfigMap config, ReadConfigFile(path));
  return BuildPlan(config);
}

}  // namespace dpfed
