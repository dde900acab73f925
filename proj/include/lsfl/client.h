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

#ifndef LSFL_CLIENT_H_
#define LSFL_CLIENT_H_

#include <cstdint>
#include <span>

#include "lsfl/adamw.h"
#include "lsfl/dp.h"
#include "lsfl/layer_partition.h"
#include "lsfl/model.h"
#include "lsfl/tensor.h"

namespace lsfl {

struct TrainConfig {
  AdamWConfig adamw;
  int local_epochs = 1;
  int batch_size = 8;
  // Off keeps each client's head local (FedPer-style); on averages it.
  bool head_aggregation = true;

  void Validate() const;
};

// A client's post-training parameters for the aggregated layer ids, with
// its sample count as the aggregation weight.
template <typename T>
struct ClientUpdate {
  uint32_t round = 0;
  uint32_t client_id = 0;
  uint64_t weight = 0;
  LayeredTensors<T> params;

  bool BitwiseEquals(const ClientUpdate& other) const {
    return round == other.round && client_id == other.client_id &&
           weight == other.weight && lsfl::BitwiseEquals(params, other.params);
  }
};

template <typename T>
struct LocalUpdateResult {
  ClientUpdate<T> update;
  // The trained head when heads are not aggregated; empty otherwise.
  TensorGroup<T> local_head;
  double mean_loss = 0.0;
  int64_t steps = 0;
};

// E epochs of mini-batch AdamW over `data`, touching trainable tensors only.
// Batches follow a shuffle drawn from `shuffle_seed`; DP noise (if enabled)
// is drawn from `noise_seed`. The optimizer state starts fresh.
template <typename T>
LocalUpdateResult<T> LocalUpdate(const ModelConfig& cfg,
                                 const ParamSet<T>& global,
                                 const LayerPartition& partition,
                                 std::span<const Sample> data,
                                 const TrainConfig& tc, const DPConfig& dp,
                                 uint32_t round, uint32_t client_id,
                                 uint64_t shuffle_seed, uint64_t noise_seed);

}  // namespace lsfl

#endif  // LSFL_CLIENT_H_
