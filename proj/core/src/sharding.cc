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

#include "dpfed/sharding.h"

#include <glog/logging.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <utility>

#include "absl/strings/str_cat.h"
#include "json.hpp"

namespace dpfed {

uint64_t UniformIndex(RandomStream& stream, uint64_t bound) {
  const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % bound);
  uint64_t draw = stream.NextU64();
  while (draw >= limit) draw = stream.NextU64();
  return draw % bound;
}

absl::StatusOr<ShardAssignment> PartitionByLabelShards(
    const std::vector<int>& labels, int64_t n_clients, int shards_per_client,
    const StreamKey& key) {
  if (n_clients < 1 || shards_per_client < 1) {
    return absl::InvalidArgumentError(
        "n_clients and shards_per_client must be >= 1");
  }
  const int64_t total = static_cast<int64_t>(labels.size());
  const int64_t shard_count = n_clients * shards_per_client;
  if (total < shard_count) {
    return absl::InvalidArgumentError(
        absl::StrCat("divisibility violation: ", total, " samples cannot fill ",
                     shard_count, " shards"));
  }

  std::vector<int64_t> order(static_cast<size_t>(total));
  std::iota(order.begin(), order.end(), int64_t{0});
  RandomStream shuffle(key.Child("shuffle", 0));
  for (int64_t i = total - 1; i > 0; --i) {
    const auto j = static_cast<int64_t>(
        UniformIndex(shuffle, static_cast<uint64_t>(i + 1)));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  const int64_t kept = (total / shard_count) * shard_count;
  ShardAssignment out;
  out.shards_per_client = shards_per_client;
  out.dropped_samples = total - kept;
  if (out.dropped_samples > 0) {
    LOG(INFO) << "label shards: keeping " << kept << " of " << total
              << " samples so " << shard_count << " shards divide evenly";
  }
  order.resize(static_cast<size_t>(kept));
  std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    return labels[static_cast<size_t>(a)] < labels[static_cast<size_t>(b)];
  });

  std::vector<int64_t> deck(static_cast<size_t>(shard_count));
  std::iota(deck.begin(), deck.end(), int64_t{0});
  RandomStream deal(key.Child("deal", 0));
  for (int64_t i = shard_count - 1; i > 0; --i) {
    const auto j =
        static_cast<int64_t>(UniformIndex(deal, static_cast<uint64_t>(i + 1)));
    std::swap(deck[static_cast<size_t>(i)], deck[static_cast<size_t>(j)]);
  }

  const int64_t shard_size = kept / shard_count;
  out.client_to_sample_indices.resize(static_cast<size_t>(n_clients));
  for (int64_t client = 0; client < n_clients; ++client) {
    auto& mine = out.client_to_sample_indices[static_cast<size_t>(client)];
    for (int s = 0; s < shards_per_client; ++s) {
      const int64_t shard =
          deck[static_cast<size_t>(client * shards_per_client + s)];
      for (int64_t t = 0; t < shard_size; ++t) {
        mine.push_back(order[static_cast<size_t>(shard * shard_size + t)]);
      }
    }
    std::sort(mine.begin(), mine.end());
  }
  return out;
}

int DistinctClasses(const std::vector<int>& labels,
                    const std::vector<int64_t>& indices) {
  std::set<int> seen;
  for (int64_t i : indices) seen.insert(labels[static_cast<size_t>(i)]);
  return static_cast<int>(seen.size());
}

std::string ShardAssignmentToJson(const ShardAssignment& assignment) {
  nlohmann::ordered_json clients = nlohmann::ordered_json::object();
  for (size_t c = 0; c < assignment.client_to_sample_indices.size(); ++c) {
    clients[std::to_string(c)] = assignment.client_to_sample_indices[c];
  }
  nlohmann::ordered_json doc;
  doc["shards_per_client"] = assignment.shards_per_client;
  doc["dropped_samples"] = assignment.dropped_samples;
  doc["clients"] = std::move(clients);
  return doc.dump(2);
}

}  // namespace dpfed
