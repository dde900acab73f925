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

#include "lsfl/aggregation.h"

#include <vector>

namespace lsfl {

template <typename T>
AggregatedTrainables<T> Aggregate(std::span<const ClientUpdate<T>> updates) {
  if (updates.empty()) throw ProtocolError("aggregate: no client updates");
  const ClientUpdate<T>& first = updates.front();
  double total_weight = 0.0;
  for (const ClientUpdate<T>& u : updates) {
    if (u.round != first.round) {
      throw ProtocolError("aggregate: client " + std::to_string(u.client_id) +
                          " sent round " + std::to_string(u.round) +
                          ", expected " + std::to_string(first.round));
    }
    if (!SameStructure(u.params, first.params)) {
      throw ProtocolError("aggregate: client " + std::to_string(u.client_id) +
                          " update keyset/shapes differ from client " +
                          std::to_string(first.client_id));
    }
    total_weight += static_cast<double>(u.weight);
  }
  if (!(total_weight > 0.0)) {
    throw ProtocolError("aggregate: total weight is zero");
  }
  std::vector<double> coef;
  coef.reserve(updates.size());
  for (const ClientUpdate<T>& u : updates) {
    coef.push_back(static_cast<double>(u.weight) / total_weight);
  }

  AggregatedTrainables<T> out = ZerosLike(first.params);
  std::vector<double> acc;
  for (auto& [id, group] : out) {
    for (auto& [name, t] : group) {
      acc.assign(t.size(), 0.0);
      for (size_t c = 0; c < updates.size(); ++c) {
        const Tensor<T>& src = updates[c].params.at(id).at(name);
        for (size_t i = 0; i < t.size(); ++i) {
          acc[i] += coef[c] * static_cast<double>(src[i]);
        }
      }
      for (size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(acc[i]);
    }
  }
  return out;
}

template <typename T>
ParamSet<T> ApplyUpdate(const ParamSet<T>& global,
                        const AggregatedTrainables<T>& agg,
                        const std::set<int>& expected_layers) {
  std::set<int> keys;
  for (const auto& [id, group] : agg) keys.insert(id);
  if (keys != expected_layers) {
    throw ProtocolError("apply_update: aggregated layer set does not match "
                        "the round's trainable layers");
  }
  ParamSet<T> out = global;
  for (const auto& [id, group] : agg) {
    auto it = out.find(id);
    if (it == out.end()) {
      throw ProtocolError("apply_update: layer " + std::to_string(id) +
                          " missing from the global model");
    }
    LayeredTensors<T> want{{id, it->second}};
    LayeredTensors<T> got{{id, group}};
    if (!SameStructure(want, got)) {
      throw ProtocolError("apply_update: layer " + std::to_string(id) +
                          " tensors do not match the global model");
    }
    it->second = group;
  }
  return out;
}

template AggregatedTrainables<float> Aggregate<float>(
    std::span<const ClientUpdate<float>>);
template AggregatedTrainables<double> Aggregate<double>(
    std::span<const ClientUpdate<double>>);
template ParamSet<float> ApplyUpdate<float>(const ParamSet<float>&,
                                            const AggregatedTrainables<float>&,
                                            const std::set<int>&);
template ParamSet<double> ApplyUpdate<double>(
    const ParamSet<double>&, const AggregatedTrainables<double>&,
    const std::set<int>&);

}  // namespace lsfl
