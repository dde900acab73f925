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

#include "lsfl/partition.h"

namespace lsfl {

std::string PartitionStrategy::ToString() const {
  if (kind == Kind::kAll) return "all";
  return "top_k(" + std::to_string(k) + ")";
}

LayerPartition MakePartition(const ModelConfig& cfg,
                             const PartitionStrategy& strategy) {
  cfg.Validate();
  const int num_blocks = cfg.n_blocks;
  LayerPartition partition;
  if (strategy.kind == PartitionStrategy::Kind::kAll) {
    for (int id = 0; id <= cfg.head_layer(); ++id) partition.trainable.insert(id);
    return partition;
  }
  if (strategy.k < 0 || strategy.k > num_blocks) {
    throw ConfigError("top_k: k = " + std::to_string(strategy.k) +
                      " outside [0, " + std::to_string(num_blocks) + "]");
  }
  partition.frozen.insert(0);
  for (int b = 1; b <= num_blocks; ++b) {
    if (b > num_blocks - strategy.k) {
      partition.trainable.insert(b);
    } else {
      partition.frozen.insert(b);
    }
  }
  partition.trainable.insert(cfg.head_layer());
  return partition;
}

void ValidatePartition(const ModelConfig& cfg, const LayerPartition& partition) {
  for (int id = 0; id <= cfg.head_layer(); ++id) {
    const bool t = partition.trainable.count(id) > 0;
    const bool f = partition.frozen.count(id) > 0;
    if (t == f) {
      throw ConfigError("partition: layer " + std::to_string(id) +
                        (t ? " is both trainable and frozen"
                           : " is neither trainable nor frozen"));
    }
  }
  if (partition.trainable.size() + partition.frozen.size() !=
      static_cast<size_t>(cfg.head_layer() + 1)) {
    throw ConfigError("partition names layers outside the model");
  }
  if (!partition.IsTrainable(cfg.head_layer())) {
    throw ConfigError("partition: the task head must be trainable");
  }
}

std::set<int> AggregatedLayers(const ModelConfig& cfg,
                               const LayerPartition& partition,
                               bool head_aggregation) {
  std::set<int> ids = partition.trainable;
  if (!head_aggregation) ids.erase(cfg.head_layer());
  return ids;
}

}  // namespace lsfl
