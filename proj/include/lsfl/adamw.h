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

#ifndef LSFL_ADAMW_H_
#define LSFL_ADAMW_H_

#include <cstdint>

#include "lsfl/tensor.h"

namespace lsfl {

struct AdamWConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

template <typename T>
struct OptimizerState {
  LayeredTensors<T> m;
  LayeredTensors<T> v;
  int64_t step = 0;
};

// One AdamW step on the tensors named in `grads`. Moments are created on
// first use. Weight decay is decoupled (w -= lr * wd * w) and only touches
// tensors for which IsDecayed() holds.
template <typename T>
void AdamWStep(OptimizerState<T>& state, ParamSet<T>& params,
               const GradSet<T>& grads, const AdamWConfig& hyper);

}  // namespace lsfl

#endif  // LSFL_ADAMW_H_
