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

#ifndef DPFED_SHARDING_H_
#define DPFED_SHARDING_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "dpfed/random_stream.h"

namespace dpfed {

struct ShardAssignment {
  int shards_per_client = 0;
  // client id -> ascending sample indices.
  std::vector<std::vector<int64_t>> client_to_sample_indices;
  // Samples left out so that the shard count divides the dataset.
  int64_t dropped_samples = 0;
};

// Label-sorted shard partition for non-IID clients.
//
// Sample indices are shuffled (stream key/("shuffle", 0)), truncated to the
// largest multiple of n_clients * shards_per_client, stably sorted by label,
// and split into that many equal contiguous shards. Shards are then dealt
// uniformly at random without replacement (stream key/("deal", 0)),
// shards_per_client to each client. Fails when there are fewer samples than
// shards.
absl::StatusOr<ShardAssignment> PartitionByLabelShards(
    const std::vector<int>& labels, int64_t n_clients, int shards_per_client,
    const StreamKey& key);

// Number of distinct labels among the given sample indices.
int DistinctClasses(const std::vector<int>& labels,
                    const std::vector<int64_t>& indices);

// {"shards_per_client": s, "dropped_samples": k, "clients": {"0": [...]}}
std::string ShardAssignmentToJson(const ShardAssignment& assignment);

// Uniform integer in [0, bound) by rejection; bound >= 1.
uint64_t UniformIndex(RandomStream& stream, uint64_t bound);

}  // namespace dpfed

#endif  // DPFED_SHARDING_H_
