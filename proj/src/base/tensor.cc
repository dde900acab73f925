// Copyright 2026 The LSFL Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lsfl/tensor.h"

#include <algorithm>
#include <cmath>

namespace lsfl {

uint64_t Fnv1a64(std::span<const uint8_t> bytes, uint64_t basis) {
  uint64_t h = basis;
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  return h;
}

uint64_t Fnv1a64(const std::string& s) {
  return Fnv1a64(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

template <typename T>
double MaxAbsDiff(const LayeredTensors<T>& a, const LayeredTensors<T>& b) {
  if (!SameStructure(a, b)) {
    throw InternalError("MaxAbsDiff: tensor sets differ in structure");
  }
  double worst = 0.0;
  auto ib = b.begin();
  for (const auto& [id, group] : a) {
    auto tb = ib->second.begin();
    for (const auto& [name, t] : group) {
      for (size_t i = 0; i < t.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(t[i]) -
                                         static_cast<double>(tb->second[i])));
      }
      ++tb;
    }
    ++ib;
  }
  return worst;
}

template <typename T>
uint64_t Checksum(const LayeredTensors<T>& set,
                  const std::vector<int>& layer_ids) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& [id, group] : set) {
    if (!layer_ids.empty() &&
        std::find(layer_ids.begin(), layer_ids.end(), id) == layer_ids.end()) {
      continue;
    }
    for (const auto& [name, t] : group) {
      h = Fnv1a64(std::span<const uint8_t>(
                      reinterpret_cast<const uint8_t*>(name.data()),
                      name.size()),
                  h);
      h = Fnv1a64(std::span<const uint8_t>(
                      reinterpret_cast<const uint8_t*>(t.data()),
                      t.size() * sizeof(T)),
                  h);
    }
  }
  return h;
}

template double MaxAbsDiff(const LayeredTensors<float>&,
                           const LayeredTensors<float>&);
template double MaxAbsDiff(const LayeredTensors<double>&,
                           const LayeredTensors<double>&);
template uint64_t Checksum(const LayeredTensors<float>&,
                           const std::vector<int>&);
template uint64_t Checksum(const LayeredTensors<double>&,
                           const std::vector<int>&);

}  // namespace lsfl
