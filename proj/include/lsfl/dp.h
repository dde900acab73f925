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

#ifndef LSFL_DP_H_
#define LSFL_DP_H_

#include <cstdint>
#include <optional>
#include <span>

#include "lsfl/rng.h"
#include "lsfl/tensor.h"

namespace lsfl {

struct DPConfig {
  bool enabled = false;
  double clip_norm = 1.0;
  double noise_multiplier = 0.0;
  double delta = 1e-5;
  // When set, the noise multiplier comes from CalibrateSigma.
  std::optional<double> target_epsilon;
  int64_t accounting_steps = 1;

  void Validate() const;
};

// Per-example DP-SGD: each example's flattened gradient is scaled by
// min(1, C / ||g||_2), the clipped gradients are summed, N(0, sigma^2 C^2)
// noise is added once per coordinate, and the sum is divided by the batch
// size. The summation order matches the non-private batch gradient, so with
// no active clipping and sigma = 0 the result is bitwise the plain mean.
template <typename T>
GradSet<T> DpPrivatize(std::span<const GradSet<T>> per_example_grads,
                       double clip_norm, double noise_multiplier, Rng& rng);

// L2 norm of a whole GradSet, accumulated in double.
template <typename T>
double GlobalNorm(const GradSet<T>& grads);

// Gaussian-mechanism noise multiplier for (epsilon, delta) over `steps`
// steps, splitting the budget by basic composition:
//   sigma = sqrt(2 ln(1.25 / (delta / T))) / (epsilon / T).
// Loose, but closed form.
double CalibrateSigma(double epsilon, double delta, int64_t steps);

}  // namespace lsfl

#endif  // LSFL_DP_H_
