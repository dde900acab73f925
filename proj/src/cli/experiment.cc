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

#include "lsfl/experiment.h"

#include "lsfl/partition.h"

namespace lsfl {

ExperimentData GenerateData(const ExperimentConfig& cfg) {
  ExperimentData d;
  const uint64_t s = cfg.seed;
  d.corpus = GenCorpus(DeriveSeed(cfg.pretrain_seed, SeedRole::kData, 0),
                       cfg.pretrain_seqs, cfg.grammar);
  if (cfg.task == TaskKind::kTagging) {
    d.train = ToSamples(GenTagging(DeriveSeed(s, SeedRole::kData, 1),
                                   cfg.train_seqs, cfg.grammar));
    d.test = ToSamples(GenTagging(DeriveSeed(s, SeedRole::kData, 2),
                                  cfg.test_seqs, cfg.grammar));
  } else {
    d.train = ToSamples(GenMultilabel(DeriveSeed(s, SeedRole::kData, 1),
                                      cfg.train_seqs, cfg.grammar));
    d.test = ToSamples(GenMultilabel(DeriveSeed(s, SeedRole::kData, 2),
                                     cfg.test_seqs, cfg.grammar));
  }
  d.clients = PartitionClients(d.train, cfg.grammar, cfg.num_clients,
                               cfg.alpha, DeriveSeed(s, SeedRole::kData, 3));
  return d;
}

ParamSet<float> PretrainBackbone(const ExperimentConfig& cfg,
                                 const ExperimentData& data) {
  return RunPretraining(cfg.MlmModel(), data.corpus, cfg.pretrain_steps,
                        DeriveSeed(cfg.pretrain_seed, SeedRole::kInit, 0),
                        cfg.pretrain);
}

RunResult RunExperiment(const ExperimentConfig& cfg, RunMode mode,
                        const FederationConfig& fc,
                        const ParamSet<float>& backbone,
                        const ExperimentData& data) {
  const ParamSet<float> initial = AttachHead(
      backbone, fc.model, DeriveSeed(cfg.seed, SeedRole::kInit, 1));
  RunResult out;
  out.mode = mode;
  switch (mode) {
    case RunMode::kLayerSkip:
    case RunMode::kFedAvgFull:
      out.history = RunFederation(fc, initial, data.clients, data.test);
      break;
    case RunMode::kCentralized:
      out.history = RunCentralized(fc, initial, data.train, data.test);
      break;
    case RunMode::kLocalOnly: {
      LocalOnlyResult lo = RunLocalOnly(fc, initial, data.clients, data.test);
      out.history = std::move(lo.mean);
      out.per_client = std::move(lo.per_client);
      break;
    }
  }
  return out;
}

}  // namespace lsfl
