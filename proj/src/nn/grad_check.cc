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

#include "lsfl/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lsfl/rng.h"

namespace lsfl {

GradCheckReport GradCheck(const ModelConfig& cfg, const ParamSet<double>& params,
                          const LayerPartition& partition,
                          std::span<const Sample> batch, double tol,
                          const GradCheckOptions& options) {
  const auto analytic =
      LossAndGrads<double>(cfg, params, partition, batch, false).grads;
  ParamSet<double> probe = params;
  Rng rng(options.seed ^ 0x6A09E667F3BCC909ULL);
  GradCheckReport report;
  for (const auto& [id, group] : analytic) {
    for (const auto& [name, grad] : group) {
      Tensor<double>& p = probe.at(id).at(name);
      std::vector<size_t> coords(p.size());
      std::iota(coords.begin(), coords.end(), size_t{0});
      const size_t take =
          std::min(coords.size(), static_cast<size_t>(options.coords_per_tensor));
      // Partial Fisher-Yates picks `take` distinct coordinates.
      for (size_t i = 0; i < take; ++i) {
        std::swap(coords[i], coords[i + rng.UniformInt(coords.size() - i)]);
      }
      for (size_t c = 0; c < take; ++c) {
        const size_t idx = coords[c];
        const double saved = p[idx];
        p[idx] = saved + options.step;
        const double up = Loss<double>(cfg, probe, batch);
        p[idx] = saved - options.step;
        const double down = Loss<double>(cfg, probe, batch);
        p[idx] = saved;
        const double numeric = (up - down) / (2.0 * options.step);
        const double a = grad[idx];
        const double denom = std::max(
            {std::abs(a), std::abs(numeric), options.denominator_floor});
        const double rel = std::abs(a - numeric) / denom;
        ++report.coords_checked;
        if (rel > report.max_rel_err || report.worst_tensor.empty()) {
          report.max_rel_err = rel;
          report.worst_tensor = std::to_string(id) + "/" + name + "[" +
                                std::to_string(idx) + "]";
          report.worst_analytic = a;
          report.worst_numeric = numeric;
        }
      }
    }
  }
  report.passed = report.max_rel_err < tol;
  return report;
}

GradCheckReport GradCheck(const ModelConfig& cfg,
                          const LayerPartition& partition,
                          std::span<const Sample> batch, double tol,
                          const GradCheckOptions& options) {
  return GradCheck(cfg, InitParams<double>(cfg, options.seed), partition, batch,
                   tol, options);
}

}  // namespace lsfl
