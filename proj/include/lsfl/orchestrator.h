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

#ifndef LSFL_ORCHESTRATOR_H_
#define LSFL_ORCHESTRATOR_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsfl/client.h"
#include "lsfl/datasynth.h"
#include "lsfl/dp.h"
#include "lsfl/metrics.h"
#include "lsfl/model.h"
#include "lsfl/partition.h"
#include "lsfl/secure_agg.h"

namespace lsfl {

// Seed derivation: DeriveSeed(master, role, index) is the first SplitMix64
// output for master ^ RoleConstant(role) ^ index. Role constants:
//   client   0x636C69656E740000  ("client")
//   data     0x6461746100000000  ("data")
//   init     0x696E697400000000  ("init")
//   dp       0x6470000000000000  ("dp")
//   mask     0x6D61736B00000000  ("mask")
//   sampling 0x73616D706C650000  ("sample")
enum class SeedRole { kClient, kData, kInit, kDp, kMask, kSampling };

uint64_t RoleConstant(SeedRole role);
uint64_t DeriveSeed(uint64_t master, SeedRole role, uint64_t index);

// Index for per-(round, client) streams.
inline uint64_t RoundClientIndex(uint32_t round, uint32_t client_id) {
  return (static_cast<uint64_t>(round) << 32) | client_id;
}

struct FederationConfig {
  ModelConfig model;
  PartitionStrategy strategy = PartitionStrategy::TopK(1);
  int rounds = 100;
  double client_fraction = 1.0;
  TrainConfig train;
  DPConfig dp;
  bool secure_agg = true;
  double quant_scale = kDefaultQuantScale;
  // Evaluate every `eval_every` rounds; the final round is always evaluated.
  int eval_every = 1;
  uint64_t master_seed = 0;
  // Client updates of a round run on up to this many threads.
  int threads = 1;

  void Validate() const;
};

struct RoundMetrics {
  int round = 0;
  Metrics metrics;
  double loss = 0.0;
  uint64_t uplink_bytes = 0;
  uint64_t downlink_bytes = 0;
  double comm_fraction = 0.0;
};

struct History {
  // Evaluated rounds only, ascending.
  std::vector<RoundMetrics> rounds;
  // Checksum of the frozen groups of the global model after every round.
  std::vector<uint64_t> frozen_checksums;
  uint64_t total_uplink_bytes = 0;
  uint64_t total_downlink_bytes = 0;
  ParamSet<float> final_params;
  // Client-local heads when heads are not aggregated.
  std::map<uint32_t, TensorGroup<float>> client_heads;
};

struct PretrainConfig {
  AdamWConfig adamw;
  int batch_size = 16;
  double mask_rate = 0.15;
};

// Masked-token pretraining from InitParams(cfg, seed). The mask token is
// cfg.vocab_size - 1.
ParamSet<float> RunPretraining(const ModelConfig& cfg,
                               std::span<const std::vector<int32_t>> corpus,
                               int64_t steps, uint64_t seed,
                               const PretrainConfig& pc = {});

// Mean masked-token loss on `corpus` with masks drawn from `seed`.
double MlmLoss(const ModelConfig& cfg, const ParamSet<float>& params,
               std::span<const std::vector<int32_t>> corpus, uint64_t seed,
               double mask_rate = 0.15);

// Copies the embeddings and blocks of `backbone` and draws a fresh head for
// `task_cfg`, whose trunk shape must match.
ParamSet<float> AttachHead(const ParamSet<float>& backbone,
                           const ModelConfig& task_cfg, uint64_t seed);

Metrics EvaluateModel(const ModelConfig& cfg, const ParamSet<float>& params,
                      std::span<const Sample> test);

History RunFederation(const FederationConfig& fc,
                      const ParamSet<float>& initial,
                      std::span<const ClientDataset> clients,
                      std::span<const Sample> test);

// Mini-batch training on pooled data, one LocalUpdate pass per round with
// the seeds client 0 would use; rounds == fc.rounds.
History RunCentralized(const FederationConfig& fc,
                       const ParamSet<float>& initial,
                       std::span<const Sample> data,
                       std::span<const Sample> test);

struct LocalOnlyResult {
  std::vector<History> per_client;
  // Per evaluated round, the mean of the per-client metrics and losses.
  History mean;
};

LocalOnlyResult RunLocalOnly(const FederationConfig& fc,
                             const ParamSet<float>& initial,
                             std::span<const ClientDataset> clients,
                             std::span<const Sample> test);

// Smallest recorded round whose micro-F1 reaches frac * max (undefined
// values count as 0). Empty only for an empty history.
std::optional<int> RoundsToFraction(const History& h, double frac);
std::optional<int> RoundsToFraction(std::span<const int> rounds,
                                    std::span<const double> values,
                                    double frac);

inline constexpr char kHistoryCsvHeader[] =
    "round,micro_f1,macro_f1,auc,loss,uplink_bytes,downlink_bytes,"
    "comm_fraction";

std::string HistoryCsv(const History& h);
void WriteHistoryCsv(const History& h, const std::string& path);

}  // namespace lsfl

#endif  // LSFL_ORCHESTRATOR_H_
