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

#include "lsfl/secure_agg.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

#include "lsfl/rng.h"

namespace lsfl {
namespace {

// |round(value * weight * scale)| must stay well inside int64 so the
// modular sum of a cohort decodes without wraparound.
constexpr double kMaxQuantMagnitude = 4.0e18 / 1024.0;

void CheckScale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ConfigError("quantization scale must be positive and finite");
  }
}

}  // namespace

bool MaskedUpdate::BitwiseEquals(const MaskedUpdate& other) const {
  return round == other.round && client_id == other.client_id &&
         weight == other.weight &&
         std::bit_cast<uint64_t>(scale) == std::bit_cast<uint64_t>(other.scale) &&
         lsfl::BitwiseEquals(params, other.params);
}

uint64_t LookupPairSeed(const PairSeeds& seeds, uint32_t a, uint32_t b) {
  auto ab = seeds.find({a, b});
  auto ba = seeds.find({b, a});
  if (ab == seeds.end() && ba == seeds.end()) {
    throw ProtocolError("missing pair seed for clients " + std::to_string(a) +
                        " and " + std::to_string(b));
  }
  if (ab != seeds.end() && ba != seeds.end() && ab->second != ba->second) {
    throw ProtocolError("asymmetric pair seeds for clients " +
                        std::to_string(a) + " and " + std::to_string(b));
  }
  return ab != seeds.end() ? ab->second : ba->second;
}

std::vector<uint64_t> PairMaskStream(uint64_t pair_seed, size_t count) {
  Rng rng(pair_seed);
  std::vector<uint64_t> out(count);
  for (auto& word : out) word = rng.NextU64();
  return out;
}

template <typename T>
MaskedUpdate QuantizeUpdate(const ClientUpdate<T>& u, double scale) {
  CheckScale(scale);
  MaskedUpdate m;
  m.round = u.round;
  m.client_id = u.client_id;
  m.weight = u.weight;
  m.scale = scale;
  const double factor = static_cast<double>(u.weight) * scale;
  for (const auto& [id, group] : u.params) {
    for (const auto& [name, t] : group) {
      Tensor<uint64_t> q(t.shape());
      for (size_t i = 0; i < t.size(); ++i) {
        const double v = std::round(static_cast<double>(t[i]) * factor);
        if (!(std::abs(v) <= kMaxQuantMagnitude)) {
          throw ProtocolError("value in " + std::to_string(id) + "/" + name +
                              " does not fit the fixed-point range");
        }
        q[i] = static_cast<uint64_t>(static_cast<int64_t>(v));
      }
      m.params[id].emplace(name, std::move(q));
    }
  }
  return m;
}

template <typename T>
MaskedUpdate MaskUpdate(const ClientUpdate<T>& u,
                        std::span<const uint32_t> cohort,
                        const PairSeeds& pair_seeds, double scale) {
  if (std::find(cohort.begin(), cohort.end(), u.client_id) == cohort.end()) {
    throw ProtocolError("client " + std::to_string(u.client_id) +
                        " is not in the masking cohort");
  }
  MaskedUpdate m = QuantizeUpdate(u, scale);
  const size_t total = NumElements(m.params);
  for (uint32_t peer : cohort) {
    if (peer == u.client_id) continue;
    const std::vector<uint64_t> mask =
        PairMaskStream(LookupPairSeed(pair_seeds, u.client_id, peer), total);
    const bool add = u.client_id < peer;
    size_t pos = 0;
    for (auto& [id, group] : m.params) {
      for (auto& [name, t] : group) {
        for (size_t i = 0; i < t.size(); ++i, ++pos) {
          t[i] = add ? t[i] + mask[pos] : t[i] - mask[pos];
        }
      }
    }
  }
  return m;
}

template <typename T>
AggregatedTrainables<T> SecureAggregate(std::span<const MaskedUpdate> masked,
                                        std::span<const uint32_t> cohort,
                                        uint64_t total_weight, double scale) {
  CheckScale(scale);
  if (masked.empty()) throw ProtocolError("secure aggregate: no updates");
  std::set<uint32_t> expected(cohort.begin(), cohort.end());
  std::set<uint32_t> seen;
  uint64_t weight_sum = 0;
  const MaskedUpdate& first = masked.front();
  for (const MaskedUpdate& m : masked) {
    if (!seen.insert(m.client_id).second) {
      throw ProtocolError("secure aggregate: duplicate update from client " +
                          std::to_string(m.client_id));
    }
    if (m.round != first.round) {
      throw ProtocolError("secure aggregate: mixed rounds in one cohort");
    }
    if (m.scale != scale) {
      throw ProtocolError("secure aggregate: client " +
                          std::to_string(m.client_id) +
                          " used a different quantization scale");
    }
    if (!SameStructure(m.params, first.params)) {
      throw ProtocolError("secure aggregate: client " +
                          std::to_string(m.client_id) +
                          " update keyset/shapes differ");
    }
    weight_sum += m.weight;
  }
  if (seen != expected) {
    for (uint32_t id : expected) {
      if (!seen.count(id)) {
        throw ProtocolError("secure aggregate: cohort member " +
                            std::to_string(id) +
                            " missing (dropout is not supported)");
      }
    }
    throw ProtocolError("secure aggregate: update from a client outside the "
                        "cohort");
  }
  if (total_weight == 0 || weight_sum != total_weight) {
    throw ProtocolError("secure aggregate: total weight mismatch");
  }

  const double denom = scale * static_cast<double>(total_weight);
  AggregatedTrainables<T> out;
  for (const auto& [id, group] : first.params) {
    for (const auto& [name, t] : group) {
      std::vector<uint64_t> sum(t.size(), 0);
      for (const MaskedUpdate& m : masked) {
        const Tensor<uint64_t>& src = m.params.at(id).at(name);
        for (size_t i = 0; i < t.size(); ++i) sum[i] += src[i];
      }
      Tensor<T> result(t.shape());
      for (size_t i = 0; i < t.size(); ++i) {
        result[i] = static_cast<T>(
            static_cast<double>(static_cast<int64_t>(sum[i])) / denom);
      }
      out[id].emplace(name, std::move(result));
    }
  }
  return out;
}

template MaskedUpdate QuantizeUpdate<float>(const ClientUpdate<float>&, double);
template MaskedUpdate QuantizeUpdate<double>(const ClientUpdate<double>&,
                                             double);
template MaskedUpdate MaskUpdate<float>(const ClientUpdate<float>&,
                                        std::span<const uint32_t>,
                                        const PairSeeds&, double);
template MaskedUpdate MaskUpdate<double>(const ClientUpdate<double>&,
                                         std::span<const uint32_t>,
                                         const PairSeeds&, double);
template AggregatedTrainables<float> SecureAggregate<float>(
    std::span<const MaskedUpdate>, std::span<const uint32_t>, uint64_t, double);
template AggregatedTrainables<double> SecureAggregate<double>(
    std::span<const MaskedUpdate>, std::span<const uint32_t>, uint64_t, double);

}  // namespace lsfl
