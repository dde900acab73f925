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

#ifndef LSFL_AGGREGATION_H_
#define LSFL_AGGREGATION_H_

#include <set>
#include <span>

#include "lsfl/client.h"
#include "lsfl/tensor.h"

namespace lsfl {

template <typename T>
using AggregatedTrainables = LayeredTensors<T>;

// Sample-count weighted mean of the client parameters, per tensor:
//   sum_i (|D_i| / sum_j |D_j|) * theta_i
// Accumulates in double. Coefficients are formed first, so a single client
// (coefficient exactly 1) passes through unchanged.
template <typename T>
AggregatedTrainables<T> Aggregate(std::span<const ClientUpdate<T>> updates);

// Replaces the aggregated tensors of `global`; every other tensor is left
// untouched. `expected_layers` is the set the round aggregates.
template <typename T>
ParamSet<T> ApplyUpdate(const ParamSet<T>& global,
                        const AggregatedTrainables<T>& agg,
                        const std::set<int>& expected_layers);

}  // namespace lsfl

#endif  // LSFL_AGGREGATION_H_
