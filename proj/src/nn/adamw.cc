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

#include "lsfl/adamw.h"

#include <cmath>

#include "lsfl/model.h"

namespace lsfl {

template <typename T>
void AdamWStep(OptimizerState<T>& state, ParamSet<T>& params,
               const GradSet<T>& grads, const AdamWConfig& hyper) {
  if (!(hyper.lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(hyper.beta1, t);
  const double bias2 = 1.0 - std::pow(hyper.beta2, t);
  const T b1 = static_cast<T>(hyper.beta1);
  const T b2 = static_cast<T>(hyper.beta2);
  const T step_size = static_cast<T>(hyper.lr / bias1);
  const T inv_sqrt_bias2 = static_cast<T>(1.0 / std::sqrt(bias2));
  const T eps = static_cast<T>(hyper.eps);
  const T decay = static_cast<T>(1.0 - hyper.lr * hyper.weight_decay);

  for (const auto& [id, group] : grads) {
    auto pit = params.find(id);
    if (pit == params.end()) {
      throw InternalError("AdamW: gradient for missing layer " +
                          std::to_string(id));
    }
    for (const auto& [name, g] : group) {
      auto tit = pit->second.find(name);
      if (tit == pit->second.end() || tit->second.shape() != g.shape()) {
        throw InternalError("AdamW: shape mismatch for " + std::to_string(id) +
                            "/" + name);
      }
      Tensor<T>& w = tit->second;
      auto [mit, m_new] = state.m[id].try_emplace(name, g.shape());
      auto [vit, v_new] = state.v[id].try_emplace(name, g.shape());
      Tensor<T>& m = mit->second;
      Tensor<T>& v = vit->second;
      if (m.shape() != g.shape() || v.shape() != g.shape()) {
        throw InternalError("AdamW: moment shape mismatch for " + name);
      }
      const bool decayed = IsDecayed(id, name) && hyper.weight_decay != 0.0;
      for (size_t i = 0; i < w.size(); ++i) {
        m[i] = b1 * m[i] + (T{1} - b1) * g[i];
        v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
        if (decayed) w[i] *= decay;
        w[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_bias2 + eps);
      }
    }
  }
}

template void AdamWStep<float>(OptimizerState<float>&, ParamSet<float>&,
                               const GradSet<float>&, const AdamWConfig&);
template void AdamWStep<double>(OptimizerState<double>&, ParamSet<double>&,
                                const GradSet<double>&, const AdamWConfig&);

}  // namespace lsfl
