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

#ifndef LSFL_RNG_H_
#define LSFL_RNG_H_

#include <array>
#include <cstdint>

namespace lsfl {

// Advances `state` by the splitmix64 increment and returns the mixed output.
uint64_t SplitMix64Next(uint64_t& state);

// One-shot splitmix64: the first output of a generator seeded with `x`.
uint64_t SplitMix64(uint64_t x);

// xoshiro256++ seeded from splitmix64. Gaussians use Box-Muller with the
// second variate cached, so a given seed yields one fixed stream.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t NextU64();

  // Uniform in [0, 1) with 53 random bits.
  double Uniform();

  // Uniform integer in [0, n). n must be positive.
  uint64_t UniformInt(uint64_t n);

  double Gaussian();

  // log of a Gamma(shape, 1) variate. Working in log space keeps tiny shape
  // parameters (heavily skewed Dirichlet draws) from underflowing to zero.
  double LogGamma(double shape);

 private:
  std::array<uint64_t, 4> s_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lsfl

#endif  // LSFL_RNG_H_
