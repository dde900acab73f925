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

#ifndef LSFL_SECURE_AGG_H_
#define LSFL_SECURE_AGG_H_

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "lsfl/aggregation.h"
#include "lsfl/client.h"
#include "lsfl/tensor.h"

namespace lsfl {

// Simulated secure aggregation. Each pair of clients shares a seed (standing
// in for key agreement); the pair's mask streams cancel in the modular sum.
// The full cohort must report: client dropout is not supported.

inline constexpr double kDefaultQuantScale = 1048576.0;  // 2^20

// Fixed-point payload: round(value * weight * scale) mod 2^64, plus masks.
struct MaskedUpdate {
  uint32_t round = 0;
  uint32_t client_id = 0;
  uint64_t weight = 0;
  double scale = kDefaultQuantScale;
  LayeredTensors<uint64_t> params;

  bool BitwiseEquals(const MaskedUpdate& other) const;
};

// Seeds keyed by client pair. Either orientation may be present; when both
// are, they must agree.
using PairSeeds = std::map<std::pair<uint32_t, uint32_t>, uint64_t>;

uint64_t LookupPairSeed(const PairSeeds& seeds, uint32_t a, uint32_t b);

// `count` words of the pseudorandom mask stream for one pair.
std::vector<uint64_t> PairMaskStream(uint64_t pair_seed, size_t count);

// Quantizes `u` and adds (client_id < peer) or subtracts (client_id > peer)
// each peer's mask stream, elementwise mod 2^64. Elements are visited in
// layer-id then tensor-name order.
template <typename T>
MaskedUpdate MaskUpdate(const ClientUpdate<T>& u,
                        std::span<const uint32_t> cohort,
                        const PairSeeds& pair_seeds, double scale);

// The quantized update without masks (what a cohort of one sends).
template <typename T>
MaskedUpdate QuantizeUpdate(const ClientUpdate<T>& u, double scale);

// Modular sum over the whole cohort; masks cancel and the sum is
// dequantized by 1 / (scale * total_weight). Per element the result is
// within N / (2 * scale * total_weight) of Aggregate().
template <typename T>
AggregatedTrainables<T> SecureAggregate(std::span<const MaskedUpdate> masked,
                                        std::span<const uint32_t> cohort,
                                        uint64_t total_weight, double scale);

}  // namespace lsfl

#endif  // LSFL_SECURE_AGG_H_
