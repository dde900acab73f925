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

#ifndef LSFL_LAYER_PARTITION_H_
#define LSFL_LAYER_PARTITION_H_

#include <set>

namespace lsfl {

// Frozen/trainable split of the layer ids {0, ..., L+1}.
struct LayerPartition {
  std::set<int> trainable;
  std::set<int> frozen;

  bool IsTrainable(int layer_id) const {
    return trainable.count(layer_id) > 0;
  }

  bool operator==(const LayerPartition&) const = default;
};

}  // namespace lsfl

#endif  // LSFL_LAYER_PARTITION_H_
