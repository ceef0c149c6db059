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

#ifndef DPFED_STATUS_MACROS_H_
#define DPFED_STATUS_MACROS_H_

#include <utility>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define DPFED_STATUS_CONCAT_INNER_(a, b) a##b
#define DPFED_STATUS_CONCAT_(a, b) DPFED_STATUS_CONCAT_INNER_(a, b)

#define RETURN_IF_ERROR(expr)                      \
  do {                                             \
    ::absl::Status _dpfed_status = (expr);         \
    if (!_dpfed_status.ok()) return _dpfed_status; \
  } while (0)

#define DPFED_ASSIGN_OR_RETURN_IMPL_(statusor, lhs, rexpr) \
  auto statusor = (rexpr);                                 \
  if (!statusor.ok()) return statusor.status();            \
  lhs = std::move(statusor).value()

// ASSIGN_OR_RETURN(auto x, MaybeX());
#define ASSIGN_OR_RETURN(lhs, rexpr) \
  DPFED_ASSIGN_OR_RETURN_IMPL_(      \
      DPFED_STATUS_CONCAT_(_dpfed_statusor_, __LINE__), lhs, rexpr)

#endif  // DPFED_STATUS_MACROS_H_
