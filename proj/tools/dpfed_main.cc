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

// Command-line front end: run, verify, bounds and sweep.

#include <glog/logging.h>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "dpfed/config.h"
#include "dpfed/experiment.h"
#include "dpfed/verify.h"

namespace {

struct CommonFlags {
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

void AddCommonFlags(CLI::App* command, CommonFlags* flags) {
  command->add_option("--seed", flags->seed, "single master seed");
  command->add_option("--out", flags->out, "output directory or file");
  command->add_option("--threads", flags->threads, "worker threads")
      ->check(CLI::PositiveNumber);
}

void ApplyOverrides(const CommonFlags& flags, dpfed::ConfigMap* config) {
  if (flags.seed) config->Set("seeds", std::to_string(*flags.seed));
  if (flags.out) config->Set("out", *flags.out);
  if (flags.threads) config->Set("threads", std::to_string(*flags.threads));
}

int Fail(const absl::Status& status) {
  std::cerr << "dpfed: " << status.message() << "\n";
  return dpfed::ExitCodeFor(status);
}

absl::StatusOr<std::string> Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream contents;
  contents << in.rdbuf();
  return contents.str();
}

int Run(const std::string& config_path, const CommonFlags& flags) {
  absl::StatusOr<dpfed::ConfigMap> config = dpfed::ReadConfigFile(config_path);
  if (!config.ok()) return Fail(config.status());
  ApplyOverrides(flags, &*config);
  absl::StatusOr<dpfed::ExperimentPlan> plan = dpfed::BuildPlan(*config);
  if (!plan.ok()) return Fail(plan.status());
  absl::StatusOr<dpfed::PlanOutcome> outcome =
      dpfed::RunPlan(*plan, {.write_outputs = true, .keep_iterates = false});
  if (!outcome.ok()) return Fail(outcome.status());
  for (dpfed::Algorithm a : plan->variants) {
    std::cout << dpfed::VariantName(a) << ": mean final suboptimality "
              << outcome->MeanFinalSuboptimality(a) << "\n";
  }
  std::cout << "wrote " << outcome->files.size() << " files to "
            << plan->output_directory << "\n";
  return 0;
}

int Verify(const CommonFlags& flags) {
  dpfed::VerifyOptions options;
  if (flags.seed) options.seed = *flags.seed;
  bool all = true;
  for (const dpfed::CheckResult& r : dpfed::RunVerification(options)) {
    std::cout << dpfed::FormatCheck(r) << "\n";
    all = all && r.passed;
  }
  return all ? 0 : 1;
}

int Bounds(const std::string& config_path, const std::string& trace_path,
           const CommonFlags& flags) {
  absl::StatusOr<dpfed::ConfigMap> config = dpfed::ReadConfigFile(config_path);
  if (!config.ok()) return Fail(config.status());
  ApplyOverrides(CommonFlags{flags.seed, std::nullopt, flags.threads},
                 &*config);
  absl::StatusOr<dpfed::ExperimentPlan> plan = dpfed::BuildPlan(*config);
  if (!plan.ok()) return Fail(plan.status());
  absl::StatusOr<std::string> text = Slurp(trace_path);
  if (!text.ok()) return Fail(text.status());
  absl::StatusOr<dpfed::TraceFile> trace = dpfed::ParseTraceJson(*text);
  if (!trace.ok()) return Fail(trace.status());
  absl::StatusOr<dpfed::BoundReport> report =
      dpfed::BoundsFromTrace(*plan, *trace);
  if (!report.ok()) return Fail(report.status());
  const std::string json = dpfed::BoundReportToJson(*report);
  if (flags.out) {
    std::ofstream out(*flags.out, std::ios::binary | std::ios::trunc);
    out << json;
    if (!out) return Fail(absl::UnknownError("cannot write " + *flags.out));
  } else {
    std::cout << json;
  }
  return report->holds() ? 0 : 1;
}

int Sweep(const std::string& config_path, const std::string& grid_path,
          const CommonFlags& flags) {
  absl::StatusOr<dpfed::ConfigMap> config = dpfed::ReadConfigFile(config_path);
  if (!config.ok()) return Fail(config.status());
  ApplyOverrides(CommonFlags{flags.seed, std::nullopt, flags.threads},
                 &*config);
  absl::StatusOr<std::string> grid_text = Slurp(grid_path);
  if (!grid_text.ok()) return Fail(grid_text.status());
  absl::StatusOr<dpfed::SweepGrid> grid = dpfed::ParseSweepGrid(*grid_text);
  if (!grid.ok()) return Fail(grid.status());
  std::string out = "sweep";
  if (flags.out) {
    out = *flags.out;
  } else if (const dpfed::ConfigEntry* entry = config->Find("out")) {
    out = entry->value;
  }
  const absl::Status status = dpfed::RunSweep(*config, *grid, out);
  if (!status.ok()) return Fail(status);
  std::cout << "sweep index written to " << out << "/sweep.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  google::InitGoogleLogging(argv[0]);
  FLAGS_logtostderr = true;

  CLI::App app{"Differentially private federated optimization simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags, verify_flags, bounds_flags, sweep_flags;
  std::string config_path, trace_path, grid_path;

  CLI::App* run = app.add_subcommand("run", "run every variant and seed");
  run->add_option("config", config_path, "config file")->required();
  AddCommonFlags(run, &run_flags);

  CLI::App* verify =
      app.add_subcommand("verify", "operator, lemma and fact suites");
  AddCommonFlags(verify, &verify_flags);

  CLI::App* bounds =
      app.add_subcommand("bounds", "bound report for a stored trace");
  bounds->add_option("config", config_path, "theorem-mode config")->required();
  bounds->add_option("trace", trace_path, "trace JSON")->required();
  AddCommonFlags(bounds, &bounds_flags);

  CLI::App* sweep = app.add_subcommand("sweep", "run a config over a grid");
  sweep->add_option("config", config_path, "base config")->required();
  sweep->add_option("grid", grid_path, "grid file")->required();
  AddCommonFlags(sweep, &sweep_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  if (run->parsed()) return Run(config_path, run_flags);
  if (verify->parsed()) return Verify(verify_flags);
  if (bounds->parsed()) return Bounds(config_path, trace_path, bounds_flags);
  return Sweep(config_path, grid_path, sweep_flags);
}
