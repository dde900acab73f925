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

#ifndef LSFL_EXPERIMENT_H_
#define LSFL_EXPERIMENT_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lsfl/datasynth.h"
#include "lsfl/orchestrator.h"

namespace lsfl {

enum class RunMode { kLayerSkip, kFedAvgFull, kCentralized, kLocalOnly };

const char* RunModeName(RunMode mode);
RunMode ParseRunMode(const std::string& name);

// One documented config key. Keys without a default are required.
struct ConfigKey {
  const char* name;
  const char* default_value;  // nullptr when required
  const char* help;
};

// Every accepted key in echo order.
const std::vector<ConfigKey>& ConfigKeys();

// Flat `key = value` text: one pair per line, `#` starts a comment, blank
// lines ignored. Unknown or repeated keys and malformed lines throw
// ConfigError naming the line.
std::map<std::string, std::string> ParseKeyValues(const std::string& text);

struct ExperimentConfig {
  uint64_t seed = 1;
  TaskKind task = TaskKind::kTagging;
  RunMode mode = RunMode::kLayerSkip;
  std::string out_dir;

  GrammarConfig grammar;
  int pretrain_seqs = 0;
  int train_seqs = 0;
  int test_seqs = 0;
  int num_clients = 0;
  double alpha = 0.0;

  int d_model = 0;
  int n_heads = 0;
  int n_blocks = 0;
  int d_ff = 0;

  // Seeds the pretraining corpus and backbone; other data uses `seed`.
  uint64_t pretrain_seed = 1;
  int64_t pretrain_steps = 0;
  PretrainConfig pretrain;

  // Trainable blocks for layer_skip.
  int k = 0;
  FederationConfig fed;

  std::vector<int> ablate_k;
  bool ablate_all = true;

  // Resolved values of every key, defaults included, in echo order.
  std::vector<std::pair<std::string, std::string>> resolved;

  // Model with the task head (vocabulary includes the mask token).
  ModelConfig TaskModel() const;
  ModelConfig MlmModel() const;
  // FederationConfig for `mode`, with the partition strategy it implies.
  FederationConfig FederationFor(RunMode mode) const;
  std::string Echo() const;
};

// Applies defaults and validates. `overrides` win over `values`.
ExperimentConfig ResolveConfig(
    const std::map<std::string, std::string>& values,
    const std::map<std::string, std::string>& overrides = {});
ExperimentConfig LoadConfig(
    const std::string& path,
    const std::map<std::string, std::string>& overrides = {});

struct ExperimentData {
  std::vector<std::vector<int32_t>> corpus;
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::vector<ClientDataset> clients;
};

// Deterministic in cfg.seed and the grammar/data keys.
ExperimentData GenerateData(const ExperimentConfig& cfg);

// Pretrained trunk for cfg (MLM model parameters).
ParamSet<float> PretrainBackbone(const ExperimentConfig& cfg,
                                 const ExperimentData& data);

struct RunResult {
  RunMode mode = RunMode::kLayerSkip;
  History history;
  // Per-client histories for local_only.
  std::vector<History> per_client;
};

// Attaches a fresh task head to `backbone` and runs `fc` in `mode`.
RunResult RunExperiment(const ExperimentConfig& cfg, RunMode mode,
                        const FederationConfig& fc,
                        const ParamSet<float>& backbone,
                        const ExperimentData& data);

}  // namespace lsfl

#endif  // LSFL_EXPERIMENT_H_
