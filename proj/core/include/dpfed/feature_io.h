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

#ifndef DPFED_FEATURE_IO_H_
#define DPFED_FEATURE_IO_H_

#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpfed/objectives.h"

namespace dpfed {

// Feature files hold a labeled matrix in one of two layouts.
//
// CSV: a two-line header, then one sample per line.
//   <rows>,<cols>
//   <num_classes>
//   x_1,...,x_cols,label
//
// Binary: the magic bytes "DPFS1", then little-endian uint64 rows,
// uint64 cols, uint32 num_classes, rows*cols float64 values (row-major),
// and rows int32 labels.
//
// Parse errors are InvalidArgument with a message starting
// "byte <offset>: ".
enum class FeatureFormat { kAuto, kCsv, kBinary };

absl::StatusOr<LabeledData> LoadFeatureMatrix(const std::string& path,
                                              FeatureFormat format);

absl::StatusOr<LabeledData> ParseFeatureCsv(const std::string& contents);
absl::StatusOr<LabeledData> ParseFeatureBinary(const std::string& contents);

std::string FormatFeatureCsv(const LabeledData& data);
std::string FormatFeatureBinary(const LabeledData& data);

absl::Status WriteFeatureMatrix(const std::string& path,
                                const LabeledData& data, FeatureFormat format);

}  // namespace dpfed

#endif  // DPFED_FEATURE_IO_H_
