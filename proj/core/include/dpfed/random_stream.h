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

#ifndef DPFED_RANDOM_STREAM_H_
#define DPFED_RANDOM_STREAM_H_

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dpfed {

// Identifies a random stream by a master seed plus an ordered list of
// purpose labels, e.g. {("noise", k), ("client", i)}. Streams with equal keys
// are bitwise identical; streams with different keys are independent.
class StreamKey {
 public:
  struct Label {
    std::string tag;
    int64_t index = 0;
    bool operator==(const Label&) const = default;
  };

  explicit StreamKey(uint64_t master_seed) : master_seed_(master_seed) {}
  StreamKey(uint64_t master_seed, std::initializer_list<Label> labels)
      : master_seed_(master_seed), labels_(labels) {}

  // Returns a copy of this key with one more label appended.
  StreamKey Child(std::string_view tag, int64_t index) const;

  uint64_t master_seed() const { return master_seed_; }
  const std::vector<Label>& labels() const { return labels_; }

  // 64-bit digest of (master_seed, labels); the stream's starting state.
  uint64_t Digest() const;

  bool operator==(const StreamKey&) const = default;

 private:
  uint64_t master_seed_;
  std::vector<Label> labels_;
};

// Counter-based generator: draw j of the stream is mix(digest + (j+1)*gamma),
// the SplitMix64 output function. Draw j depends only on (key, j).
class RandomStream {
 public:
  explicit RandomStream(const StreamKey& key) : state_(key.Digest()) {}

  uint64_t NextU64();

  // Uniform on [0, 1) with 53 random bits.
  double NextUniform();

  // Uniform on (0, 1]; safe as a log() argument.
  double NextUniformPositive();

  // Standard normal via the Box-Muller transform. Draws come in pairs from
  // two consecutive uniforms u1, u2: (R cos T, R sin T) with
  // R = sqrt(-2 ln u1), u1 in (0,1], T = 2 pi u2.
  double NextGaussian();

 private:
  uint64_t state_;
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

}  // namespace dpfed

#endif  // DPFED_RANDOM_STREAM_H_
