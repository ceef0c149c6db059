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

#include "dpfed/random_stream.h"

#include <cmath>
#include <numbers>

namespace dpfed {
namespace {

constexpr uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

uint64_t Mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a over the tag bytes.
uint64_t HashTag(std::string_view tag) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

StreamKey StreamKey::Child(std::string_view tag, int64_t index) const {
  StreamKey child = *this;
  child.labels_.push_back(Label{std::string(tag), index});
  return child;
}

uint64_t StreamKey::Digest() const {
  uint64_t h = Mix64(master_seed_ + kGoldenGamma);
  for (const Label& label : labels_) {
    h = Mix64(h ^ HashTag(label.tag));
    h = Mix64(h + kGoldenGamma * (static_cast<uint64_t>(label.index) + 1));
  }
  return h;
}

uint64_t RandomStream::NextU64() {
  state_ += kGoldenGamma;
  return Mix64(state_);
}

double RandomStream::NextUniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

double RandomStream::NextUniformPositive() {
  return static_cast<double>((NextU64() >> 11) + 1) * 0x1.0p-53;
}

double RandomStream::NextGaussian() {
  if (has_cached_gaussian_) {
    has_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  const double u1 = NextUniformPositive();
  const double u2 = NextUniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_gaussian_ = radius * std::sin(angle);
  has_cached_gaussian_ = true;
  return radius * std::cos(angle);
}

}  // namespace dpfed
