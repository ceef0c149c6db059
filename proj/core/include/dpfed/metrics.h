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

#ifndef DPFED_METRICS_H_
#define DPFED_METRICS_H_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dpfed/model_vector.h"

namespace dpfed {

// One row of the per-round metric file. Quantities describe round `round`
// (0-based) and the iterate it produces, w_{round+1}.
struct RoundRecord {
  int64_t round = 0;
  // f(w_{round+1}) - f(w*).
  double suboptimality = 0.0;
  // +infinity when the aggregated noise is exactly zero.
  double snr = std::numeric_limits<double>::infinity();
  int64_t cohort_size = 0;
  // Statistics of ||u_k^(i)|| over the cohort; zero for an empty cohort.
  double u_mean = 0.0;
  double u_min = 0.0;
  double u_max = 0.0;
  // Share of the cohort with ||u|| > C.
  double clip_active_fraction = 0.0;
  double eta = 0.0;
};

inline constexpr char kMetricCsvHeader[] =
    "round,suboptimality,snr,cohort_size,u_mean,u_min,u_max,"
    "clip_active_fraction,eta";

// ||signal|| / ||noise||, +infinity when the noise norm is zero.
double Snr(const ModelVector& aggregated_signal,
           const ModelVector& aggregated_noise);

// Header plus one line per record. Reals use the shortest round-trip form;
// infinite SNR is written "inf".
std::string FormatMetricCsv(const std::vector<RoundRecord>& records);

}  // namespace dpfed

#endif  // DPFED_METRICS_H_
