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

#ifndef LSFL_PARTITION_H_
#define LSFL_PARTITION_H_

#include <set>
#include <string>

#include "lsfl/layer_partition.h"
#include "lsfl/model.h"

namespace lsfl {

// top_k(k): train the top k blocks and the head. all(): train everything,
// embeddings included (the full-FedAvg baseline).
struct PartitionStrategy {
  enum class Kind { kTopK, kAll };
  Kind kind = Kind::kTopK;
  int k = 0;

  static PartitionStrategy TopK(int k) { return {Kind::kTopK, k}; }
  static PartitionStrategy All() { return {Kind::kAll, 0}; }

  std::string ToString() const;
  bool operator==(const PartitionStrategy&) const = default;
};

LayerPartition MakePartition(const ModelConfig& cfg,
                             const PartitionStrategy& strategy);

// Throws ConfigError unless the partition covers {0..L+1} disjointly and
// trains the head.
void ValidatePartition(const ModelConfig& cfg, const LayerPartition& partition);

// Layer ids a client uploads: the trainable set, minus the head when heads
// stay client-local.
std::set<int> AggregatedLayers(const ModelConfig& cfg,
                               const LayerPartition& partition,
                               bool head_aggregation);

}  // namespace lsfl

#endif  // LSFL_PARTITION_H_
