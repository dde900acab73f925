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

#include <cmath>
#include <set>

#include "gtest/gtest.h"
#include "lsfl/orchestrator.h"
#include "lsfl/wire.h"

namespace lsfl {
namespace {

GrammarConfig SmallGrammar() {
  GrammarConfig g;
  g.vocab_size = 24;
  g.num_types = 2;
  g.lexicon_size = 5;
  g.seq_len = 8;
  g.entity_rate = 0.3;
  return g;
}

ModelConfig SmallModel() {
  ModelConfig cfg;
  cfg.vocab_size = 25;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.n_blocks = 2;
  cfg.d_ff = 24;
  cfg.max_seq_len = 8;
  cfg.num_types = 2;
  return cfg;
}

struct Fixture {
  ModelConfig model = SmallModel();
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::vector<ClientDataset> clients;
  ParamSet<float> initial;
};

Fixture MakeFixture(int num_clients, int train_seqs = 120) {
  Fixture f;
  const GrammarConfig g = SmallGrammar();
  f.train = ToSamples(GenTagging(1, train_seqs, g));
  f.test = ToSamples(GenTagging(2, 40, g));
  f.clients = PartitionClients(f.train, g, num_clients, 0.5, 3);
  f.initial = InitParams<float>(f.model, 4);
  return f;
}

FederationConfig BaseConfig(const Fixture& f, int rounds) {
  FederationConfig fc;
  fc.model = f.model;
  fc.strategy = PartitionStrategy::TopK(1);
  fc.rounds = rounds;
  fc.train.adamw.lr = 0.01;
  fc.train.batch_size = 8;
  fc.master_seed = 77;
  return fc;
}

uint64_t ReferenceSplitMix(uint64_t x) {
  uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TEST(SeedTest, DerivationFormula) {
  EXPECT_EQ(ReferenceSplitMix(0), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(RoleConstant(SeedRole::kClient), 0x636C69656E740000ULL);
  EXPECT_EQ(RoleConstant(SeedRole::kSampling), 0x73616D706C650000ULL);
  for (SeedRole role : {SeedRole::kClient, SeedRole::kData, SeedRole::kInit,
                        SeedRole::kDp, SeedRole::kMask, SeedRole::kSampling}) {
    EXPECT_EQ(DeriveSeed(5, role, 9),
              ReferenceSplitMix(5 ^ RoleConstant(role) ^ 9));
  }
  EXPECT_NE(DeriveSeed(5, SeedRole::kClient, 0),
            DeriveSeed(5, SeedRole::kClient, 1));
  EXPECT_EQ(RoundClientIndex(2, 3), (2ULL << 32) | 3);
}

TEST(SeedTest, StreamsAreDistinctAcrossRolesAndIndices) {
  std::set<uint64_t> seen;
  for (SeedRole role : {SeedRole::kClient, SeedRole::kData, SeedRole::kInit,
                        SeedRole::kDp, SeedRole::kMask, SeedRole::kSampling}) {
    for (uint32_t r = 0; r < 20; ++r) {
      for (uint32_t c = 0; c < 20; ++c) {
        seen.insert(DeriveSeed(1, role, RoundClientIndex(r, c)));
      }
    }
  }
  EXPECT_EQ(seen.size(), 6u * 400u);
}

TEST(RoundsToFractionTest, Examples) {
  const std::vector<int> rounds = {1, 2, 3, 4, 5};
  const std::vector<double> values = {0.1, 0.5, 0.8, 0.88, 0.90};
  EXPECT_EQ(RoundsToFraction(rounds, values, 0.9), 4);
  const std::vector<double> flat = {0.3, 0.3, 0.3, 0.3, 0.3};
  EXPECT_EQ(RoundsToFraction(rounds, flat, 0.9), 1);
  const std::vector<double> peak = {0.1, 0.7, 0.5, 0.7, 0.2};
  EXPECT_EQ(RoundsToFraction(rounds, peak, 1.0), 2);
  EXPECT_FALSE(RoundsToFraction(std::span<const int>(),
                                std::span<const double>(), 0.9)
                   .has_value());
}

TEST(PretrainTest, ZeroStepsIsInitAndTrainingReducesLoss) {
  ModelConfig mlm = SmallModel();
  mlm.task = TaskKind::kMlm;
  const auto corpus = GenCorpus(5, 300, SmallGrammar());
  const std::vector<std::vector<int32_t>> held(corpus.begin(),
                                               corpus.begin() + 50);
  EXPECT_TRUE(BitwiseEquals(RunPretraining(mlm, corpus, 0, 6),
                            InitParams<float>(mlm, 6)));
  PretrainConfig pc;
  pc.adamw.lr = 0.003;
  const ParamSet<float> a = RunPretraining(mlm, corpus, 500, 6, pc);
  EXPECT_TRUE(BitwiseEquals(a, RunPretraining(mlm, corpus, 500, 6, pc)));
  EXPECT_LT(MlmLoss(mlm, a, held, 7),
            MlmLoss(mlm, InitParams<float>(mlm, 6), held, 7) - 0.3);
}

TEST(AttachHeadTest, KeepsTrunkAndReplacesHead) {
  ModelConfig mlm = SmallModel();
  mlm.task = TaskKind::kMlm;
  const ParamSet<float> backbone = InitParams<float>(mlm, 8);
  const ModelConfig task = SmallModel();
  const ParamSet<float> p = AttachHead(backbone, task, 9);
  for (int id = 0; id <= task.n_blocks; ++id) {
    EXPECT_TRUE(BitwiseEquals(p.at(id), backbone.at(id)));
  }
  EXPECT_TRUE(BitwiseEquals(p.at(3), InitHead<float>(task, 9)));
  ModelConfig wider = task;
  wider.d_ff = 32;
  EXPECT_THROW(AttachHead(backbone, wider, 9), Error);
}

TEST(FederationTest, FrozenLayersNeverChange) {
  const Fixture f = MakeFixture(4);
  const FederationConfig fc = BaseConfig(f, 4);
  const History h = RunFederation(fc, f.initial, f.clients, f.test);
  ASSERT_EQ(h.frozen_checksums.size(), 4u);
  const uint64_t initial = Checksum(f.initial, {0, 1});
  for (uint64_t c : h.frozen_checksums) EXPECT_EQ(c, initial);
  for (int id : {0, 1}) {
    EXPECT_TRUE(BitwiseEquals(h.final_params.at(id), f.initial.at(id)));
  }
  EXPECT_FALSE(BitwiseEquals(h.final_params.at(2), f.initial.at(2)));
}

TEST(FederationTest, DeterministicAcrossThreadCounts) {
  const Fixture f = MakeFixture(4);
  FederationConfig fc = BaseConfig(f, 3);
  fc.dp.enabled = true;
  fc.dp.noise_multiplier = 0.5;
  const History a = RunFederation(fc, f.initial, f.clients, f.test);
  const History b = RunFederation(fc, f.initial, f.clients, f.test);
  fc.threads = 3;
  const History c = RunFederation(fc, f.initial, f.clients, f.test);
  EXPECT_EQ(HistoryCsv(a), HistoryCsv(b));
  EXPECT_EQ(HistoryCsv(a), HistoryCsv(c));
  EXPECT_TRUE(BitwiseEquals(a.final_params, c.final_params));
}

TEST(FederationTest, UplinkBytesAreEncodedFrameSizes) {
  const Fixture f = MakeFixture(5);
  FederationConfig fc = BaseConfig(f, 3);
  fc.client_fraction = 0.6;
  const History h = RunFederation(fc, f.initial, f.clients, f.test);
  const LayerPartition p = MakePartition(f.model, fc.strategy);
  const size_t frame = FrameSize(f.model, p.trainable, WireDType::kFixedU64);
  uint64_t total = 0;
  for (const RoundMetrics& r : h.rounds) {
    EXPECT_EQ(r.uplink_bytes, 3 * frame);
    total += r.uplink_bytes;
  }
  EXPECT_EQ(h.total_uplink_bytes, total);
  std::set<int> all;
  for (int id = 0; id <= f.model.head_layer(); ++id) all.insert(id);
  EXPECT_NEAR(h.rounds[0].comm_fraction,
              static_cast<double>(frame) /
                  FrameSize(f.model, all, WireDType::kFixedU64),
              1e-12);
}

TEST(FederationTest, SecureAggregationBarelyMovesMetrics) {
  const Fixture f = MakeFixture(4);
  FederationConfig fc = BaseConfig(f, 3);
  const History secure = RunFederation(fc, f.initial, f.clients, f.test);
  fc.secure_agg = false;
  const History plain = RunFederation(fc, f.initial, f.clients, f.test);
  ASSERT_EQ(secure.rounds.size(), plain.rounds.size());
  for (size_t i = 0; i < plain.rounds.size(); ++i) {
    EXPECT_NEAR(*secure.rounds[i].metrics.micro_f1,
                *plain.rounds[i].metrics.micro_f1, 1e-3);
  }
  EXPECT_LT(MaxAbsDiff(secure.final_params, plain.final_params), 1e-4);
}

TEST(FederationTest, SingleClientMatchesCentralized) {
  const Fixture f = MakeFixture(1, 40);
  FederationConfig fc = BaseConfig(f, 3);
  fc.secure_agg = false;
  fc.train.batch_size = 64;  // one batch per epoch
  const History fed = RunFederation(fc, f.initial, f.clients, f.test);
  const History cen =
      RunCentralized(fc, f.initial, f.clients[0].examples, f.test);
  ASSERT_EQ(fed.rounds.size(), cen.rounds.size());
  for (size_t i = 0; i < fed.rounds.size(); ++i) {
    EXPECT_NEAR(*fed.rounds[i].metrics.micro_f1, *cen.rounds[i].metrics.micro_f1,
                1e-6);
    EXPECT_NEAR(fed.rounds[i].loss, cen.rounds[i].loss, 1e-6);
  }
  EXPECT_LT(MaxAbsDiff(fed.final_params, cen.final_params), 1e-6);
  const LocalOnlyResult lo = RunLocalOnly(fc, f.initial, f.clients, f.test);
  EXPECT_EQ(HistoryCsv(lo.mean), HistoryCsv(cen));
}

TEST(FederationTest, CentralizedBeatsMajorityBaseline) {
  const Fixture f = MakeFixture(1, 300);
  FederationConfig fc = BaseConfig(f, 15);
  fc.strategy = PartitionStrategy::All();
  const History h = RunCentralized(fc, f.initial, f.train, f.test);
  // Predicting the majority tag (O) everywhere scores micro-F1 0.
  EXPECT_GT(*h.rounds.back().metrics.micro_f1, 0.3);
  EXPECT_EQ(h.total_uplink_bytes, 0u);
}

TEST(FederationTest, LocalHeadsStayLocal) {
  const Fixture f = MakeFixture(3);
  FederationConfig fc = BaseConfig(f, 2);
  fc.train.head_aggregation = false;
  const History h = RunFederation(fc, f.initial, f.clients, f.test);
  EXPECT_EQ(h.client_heads.size(), 3u);
  EXPECT_FALSE(BitwiseEquals(h.client_heads.at(0), h.client_heads.at(1)));
  const LayerPartition p = MakePartition(f.model, fc.strategy);
  EXPECT_EQ(h.rounds[0].uplink_bytes,
            3 * FrameSize(f.model, AggregatedLayers(f.model, p, false),
                          WireDType::kFixedU64));
}

TEST(FederationTest, EvalCadenceKeepsFinalRound) {
  const Fixture f = MakeFixture(2);
  FederationConfig fc = BaseConfig(f, 5);
  fc.eval_every = 2;
  const History h = RunFederation(fc, f.initial, f.clients, f.test);
  std::vector<int> rounds;
  for (const auto& r : h.rounds) rounds.push_back(r.round);
  EXPECT_EQ(rounds, (std::vector<int>{2, 4, 5}));
  EXPECT_EQ(h.frozen_checksums.size(), 5u);
}

TEST(FederationTest, ConfigValidation) {
  const Fixture f = MakeFixture(2);
  FederationConfig fc = BaseConfig(f, 0);
  EXPECT_THROW(RunFederation(fc, f.initial, f.clients, f.test), ConfigError);
  fc = BaseConfig(f, 1);
  fc.client_fraction = 0.0;
  EXPECT_THROW(RunFederation(fc, f.initial, f.clients, f.test), ConfigError);
}

TEST(HistoryCsvTest, FormatAndUndefinedCells) {
  History h;
  RoundMetrics r;
  r.round = 1;
  r.metrics.micro_f1 = 0.5;
  r.loss = 1.25;
  r.uplink_bytes = 10;
  r.downlink_bytes = 20;
  r.comm_fraction = 0.25;
  h.rounds.push_back(r);
  EXPECT_EQ(HistoryCsv(h), std::string(kHistoryCsvHeader) +
                               "\n1,0.500000,,,1.250000,10,20,0.250000\n");
}

}  // namespace
}  // namespace lsfl
