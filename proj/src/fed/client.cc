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

#include "lsfl/client.h"

#include <numeric>
#include <vector>

#include "lsfl/partition.h"
#include "lsfl/rng.h"

namespace lsfl {

void TrainConfig::Validate() const {
  if (local_epochs < 1) throw ConfigError("train.local_epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(adamw.lr >= 0.0)) throw ConfigError("train.lr must be >= 0");
}

template <typename T>
LocalUpdateResult<T> LocalUpdate(const ModelConfig& cfg,
                                 const ParamSet<T>& global,
                                 const LayerPartition& partition,
                                 std::span<const Sample> data,
                                 const TrainConfig& tc, const DPConfig& dp,
                                 uint32_t round, uint32_t client_id,
                                 uint64_t shuffle_seed, uint64_t noise_seed) {
  if (data.empty()) {
    throw InputError("client " + std::to_string(client_id) +
                     " has an empty dataset");
  }
  tc.Validate();
  if (dp.enabled) dp.Validate();

  ParamSet<T> local = global;
  OptimizerState<T> state;
  Rng shuffle_rng(shuffle_seed);
  Rng noise_rng(noise_seed);
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<Sample> batch;
  batch.reserve(tc.batch_size);

  LocalUpdateResult<T> result;
  double loss_sum = 0.0;
  for (int epoch = 0; epoch < tc.local_epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.UniformInt(i)]);
    }
    for (size_t start = 0; start < order.size(); start += tc.batch_size) {
      const size_t end = std::min(order.size(), start + tc.batch_size);
      batch.clear();
      for (size_t j = start; j < end; ++j) batch.push_back(data[order[j]]);
      GradSet<T> grads;
      if (dp.enabled) {
        auto lg = LossAndGrads<T>(cfg, local, partition, batch, true);
        loss_sum += lg.loss;
        grads = DpPrivatize<T>(lg.per_example, dp.clip_norm,
                               dp.noise_multiplier, noise_rng);
      } else {
        auto lg = LossAndGrads<T>(cfg, local, partition, batch, false);
        loss_sum += lg.loss;
        grads = std::move(lg.grads);
      }
      AdamWStep(state, local, grads, tc.adamw);
      ++result.steps;
    }
  }
  result.mean_loss = loss_sum / static_cast<double>(result.steps);

  result.update.round = round;
  result.update.client_id = client_id;
  result.update.weight = data.size();
  for (int id : AggregatedLayers(cfg, partition, tc.head_aggregation)) {
    result.update.params.emplace(id, std::move(local.at(id)));
  }
  if (!tc.head_aggregation) {
    result.local_head = std::move(local.at(cfg.head_layer()));
  }
  return result;
}

template LocalUpdateResult<float> LocalUpdate<float>(
    const ModelConfig&, const ParamSet<float>&, const LayerPartition&,
    std::span<const Sample>, const TrainConfig&, const DPConfig&, uint32_t,
    uint32_t, uint64_t, uint64_t);
template LocalUpdateResult<double> LocalUpdate<double>(
    const ModelConfig&, const ParamSet<double>&, const LayerPartition&,
    std::span<const Sample>, const TrainConfig&, const DPConfig&, uint32_t,
    uint32_t, uint64_t, uint64_t);

}  // namespace lsfl
