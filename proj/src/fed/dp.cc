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

#include "lsfl/dp.h"

#include <cmath>

#include "lsfl/error.h"

namespace lsfl {

void DPConfig::Validate() const {
  if (!(clip_norm > 0.0)) throw ConfigError("dp.clip_norm must be > 0");
  if (!(noise_multiplier >= 0.0)) {
    throw ConfigError("dp.sigma must be >= 0");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("dp.delta must lie in (0, 1)");
  }
  if (target_epsilon && !(*target_epsilon > 0.0)) {
    throw ConfigError("dp.epsilon must be > 0");
  }
  if (accounting_steps < 1) throw ConfigError("dp accounting steps must be >= 1");
}

template <typename T>
double GlobalNorm(const GradSet<T>& grads) {
  double ss = 0.0;
  for (const auto& [id, group] : grads) {
    for (const auto& [name, t] : group) {
      for (size_t i = 0; i < t.size(); ++i) {
        const double v = t[i];
        ss += v * v;
      }
    }
  }
  return std::sqrt(ss);
}

template <typename T>
GradSet<T> DpPrivatize(std::span<const GradSet<T>> per_example_grads,
                       double clip_norm, double noise_multiplier, Rng& rng) {
  if (!(clip_norm > 0.0)) throw ConfigError("clip norm must be > 0");
  if (!(noise_multiplier >= 0.0)) {
    throw ConfigError("noise multiplier must be >= 0");
  }
  if (per_example_grads.empty()) {
    throw InputError("DpPrivatize needs at least one example");
  }
  GradSet<T> sum = ZerosLike(per_example_grads.front());
  for (const GradSet<T>& g : per_example_grads) {
    if (!SameStructure(g, sum)) {
      throw InputError("per-example gradients do not share a keyset");
    }
    const double norm = GlobalNorm(g);
    const T factor = norm > clip_norm ? static_cast<T>(clip_norm / norm) : T{1};
    auto gi = g.begin();
    for (auto& [id, group] : sum) {
      auto ti = gi->second.begin();
      for (auto& [name, t] : group) {
        const Tensor<T>& src = ti->second;
        for (size_t i = 0; i < t.size(); ++i) t[i] += src[i] * factor;
        ++ti;
      }
      ++gi;
    }
  }
  if (noise_multiplier > 0.0) {
    const double stddev = noise_multiplier * clip_norm;
    for (auto& [id, group] : sum) {
      for (auto& [name, t] : group) {
        for (size_t i = 0; i < t.size(); ++i) {
          t[i] += static_cast<T>(stddev * rng.Gaussian());
        }
      }
    }
  }
  const T count = static_cast<T>(per_example_grads.size());
  for (auto& [id, group] : sum) {
    for (auto& [name, t] : group) {
      for (size_t i = 0; i < t.size(); ++i) t[i] /= count;
    }
  }
  return sum;
}

double CalibrateSigma(double epsilon, double delta, int64_t steps) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("epsilon must be positive and finite");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("delta must lie in (0, 1)");
  }
  if (steps < 1) throw ConfigError("steps must be >= 1");
  const double t = static_cast<double>(steps);
  const double eps_step = epsilon / t;
  const double delta_step = delta / t;
  return std::sqrt(2.0 * std::log(1.25 / delta_step)) / eps_step;
}

template double GlobalNorm<float>(const GradSet<float>&);
template double GlobalNorm<double>(const GradSet<double>&);
template GradSet<float> DpPrivatize<float>(std::span<const GradSet<float>>,
                                           double, double, Rng&);
template GradSet<double> DpPrivatize<double>(std::span<const GradSet<double>>,
                                             double, double, Rng&);

}  // namespace lsfl
