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

#ifndef LSFL_GRAD_CHECK_H_
#define LSFL_GRAD_CHECK_H_

#include <cstdint>
#include <span>
#include <string>

#include "lsfl/layer_partition.h"
#include "lsfl/model.h"

namespace lsfl {

struct GradCheckOptions {
  // Coordinates sampled per tensor (all of them when the tensor is smaller).
  int coords_per_tensor = 20;
  double step = 1e-5;
  // Relative error is |a - n| / max(|a|, |n|, denominator_floor); the floor
  // keeps exactly-zero gradients from dividing by zero.
  double denominator_floor = 1e-6;
  uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  // "layer/name[index]" of the worst coordinate.
  std::string worst_tensor;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  size_t coords_checked = 0;
  bool passed = false;

  bool operator==(const GradCheckReport&) const = default;
};

// Analytic gradients against central finite differences, in f64.
GradCheckReport GradCheck(const ModelConfig& cfg, const ParamSet<double>& params,
                          const LayerPartition& partition,
                          std::span<const Sample> batch, double tol,
                          const GradCheckOptions& options = {});

// Same, on parameters drawn by InitParams(cfg, options.seed).
GradCheckReport GradCheck(const ModelConfig& cfg,
                          const LayerPartition& partition,
                          std::span<const Sample> batch, double tol,
                          const GradCheckOptions& options = {});

}  // namespace lsfl

#endif  // LSFL_GRAD_CHECK_H_
