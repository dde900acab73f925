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
#include <limits>

#include "gtest/gtest.h"
#include "lsfl/adamw.h"
#include "lsfl/aggregation.h"
#include "lsfl/client.h"
#include "lsfl/dp.h"
#include "lsfl/partition.h"
#include "lsfl/rng.h"
#include "lsfl/secure_agg.h"

namespace lsfl {
namespace {

ModelConfig TinyModel(int blocks) {
  ModelConfig cfg;
  cfg.vocab_size = 9;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.n_blocks = blocks;
  cfg.d_ff = 8;
  cfg.max_seq_len = 5;
  cfg.task = TaskKind::kTagging;
  cfg.num_types = 2;
  return cfg;
}

std::vector<Sample> TinyData(const ModelConfig& cfg, int count, uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> out;
  for (int i = 0; i < count; ++i) {
    Sample s;
    for (int p = 0; p < 5; ++p) {
      s.tokens.push_back(static_cast<int32_t>(rng.UniformInt(cfg.vocab_size)));
      s.targets.push_back(static_cast<int32_t>(rng.UniformInt(cfg.OutputDim())));
    }
    out.push_back(s);
  }
  return out;
}

ParamSet<double> RandomSet(Rng& rng, const std::vector<size_t>& sizes) {
  ParamSet<double> p;
  for (size_t id = 0; id < sizes.size(); ++id) {
    Tensor<double> t({sizes[id]});
    for (size_t i = 0; i < t.size(); ++i) t[i] = 4 * rng.Uniform() - 2;
    p[static_cast<int>(id)].emplace("w", std::move(t));
  }
  return p;
}

// AdamW

TEST(AdamWTest, MatchesScalarReference) {
  AdamWConfig hyper;
  hyper.lr = 0.05;
  hyper.weight_decay = 0.1;
  ParamSet<double> p;
  p[1].emplace("wq", Tensor<double>({2}, {0.5, -1.0}));
  p[1].emplace("attn_norm", Tensor<double>({1}, {2.0}));
  OptimizerState<double> state;
  double w0 = 0.5, m = 0, v = 0, g0 = 1.0;
  double n0 = 2.0, mn = 0, vn = 0;
  for (int t = 1; t <= 3; ++t) {
    const double g = g0 * t;
    GradSet<double> grads;
    grads[1].emplace("wq", Tensor<double>({2}, {g, 0.0}));
    grads[1].emplace("attn_norm", Tensor<double>({1}, {-g}));
    AdamWStep(state, p, grads, hyper);
    // Decoupled decay first, then the bias-corrected Adam step.
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    w0 *= 1 - hyper.lr * hyper.weight_decay;
    w0 -= hyper.lr * (m / (1 - std::pow(0.9, t))) /
          (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    mn = 0.9 * mn - 0.1 * g;
    vn = 0.999 * vn + 0.001 * g * g;
    n0 -= hyper.lr * (mn / (1 - std::pow(0.9, t))) /
          (std::sqrt(vn / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(p[1].at("wq")[0], w0, 1e-12);
    EXPECT_NEAR(p[1].at("attn_norm")[0], n0, 1e-12);
  }
  EXPECT_EQ(state.step, 3);
  // Zero gradient: only the decay moves the weight.
  EXPECT_NEAR(p[1].at("wq")[1], -1.0 * std::pow(1 - 0.005, 3), 1e-12);
}

TEST(AdamWTest, UntouchedTensorsKeepNoState) {
  ParamSet<float> p;
  p[2].emplace("wk", Tensor<float>({1}, {1.0f}));
  p[3].emplace("w_out", Tensor<float>({1}, {1.0f}));
  GradSet<float> g;
  g[3].emplace("w_out", Tensor<float>({1}, {0.5f}));
  OptimizerState<float> state;
  AdamWStep(state, p, g, AdamWConfig{});
  EXPECT_EQ(p[2].at("wk")[0], 1.0f);
  EXPECT_EQ(state.m.count(2), 0u);
  EXPECT_EQ(state.m.at(3).count("w_out"), 1u);
}

TEST(AdamWTest, DegenerateMomentsGiveSignStep) {
  AdamWConfig hyper;
  hyper.lr = 0.1;
  hyper.beta1 = 0.0;
  hyper.beta2 = 0.0;
  hyper.eps = 0.0;
  hyper.weight_decay = 0.0;
  ParamSet<double> p;
  p[1].emplace("wq", Tensor<double>({1}, {1.0}));
  GradSet<double> g;
  g[1].emplace("wq", Tensor<double>({1}, {1.0}));
  OptimizerState<double> state;
  AdamWStep(state, p, g, hyper);
  EXPECT_DOUBLE_EQ(p[1].at("wq")[0], 0.9);
}

TEST(AdamWTest, ZeroGradientWithoutDecayIsFixedPoint) {
  AdamWConfig hyper;
  hyper.weight_decay = 0.0;
  ParamSet<double> p;
  p[1].emplace("wq", Tensor<double>({2}, {1.5, -2.0}));
  const ParamSet<double> before = p;
  GradSet<double> g;
  g[1].emplace("wq", Tensor<double>({2}));
  OptimizerState<double> state;
  AdamWStep(state, p, g, hyper);
  EXPECT_TRUE(BitwiseEquals(p, before));
  EXPECT_EQ(state.step, 1);
}

// Partition

TEST(PartitionTest, TopKAndAll) {
  const ModelConfig cfg = TinyModel(8);
  const LayerPartition top2 = MakePartition(cfg, PartitionStrategy::TopK(2));
  EXPECT_EQ(top2.trainable, (std::set<int>{7, 8, 9}));
  EXPECT_EQ(top2.frozen, (std::set<int>{0, 1, 2, 3, 4, 5, 6}));
  const LayerPartition all = MakePartition(cfg, PartitionStrategy::All());
  EXPECT_EQ(all.trainable.size(), 10u);
  EXPECT_TRUE(all.frozen.empty());
  const LayerPartition head = MakePartition(cfg, PartitionStrategy::TopK(0));
  EXPECT_EQ(head.trainable, (std::set<int>{9}));
  // k = L trains every block but leaves the embeddings frozen.
  const LayerPartition blocks = MakePartition(cfg, PartitionStrategy::TopK(8));
  EXPECT_EQ(blocks.frozen, (std::set<int>{0}));
  EXPECT_THROW(MakePartition(cfg, PartitionStrategy::TopK(9)), ConfigError);
  EXPECT_THROW(MakePartition(cfg, PartitionStrategy::TopK(-1)), ConfigError);
}

TEST(PartitionTest, PropertyDisjointCoverForEveryK) {
  for (int blocks = 1; blocks <= 6; ++blocks) {
    const ModelConfig cfg = TinyModel(blocks);
    for (int k = 0; k <= blocks; ++k) {
      const LayerPartition p = MakePartition(cfg, PartitionStrategy::TopK(k));
      EXPECT_NO_THROW(ValidatePartition(cfg, p));
      EXPECT_EQ(p.trainable.size(), static_cast<size_t>(k + 1));
      EXPECT_EQ(p.trainable.size() + p.frozen.size(),
                static_cast<size_t>(blocks + 2));
      if (!p.frozen.empty()) {
        EXPECT_LT(*p.frozen.rbegin(), *p.trainable.begin());
      }
    }
  }
}

TEST(PartitionTest, ValidateRejectsBrokenPartitions) {
  const ModelConfig cfg = TinyModel(2);
  LayerPartition overlap{{1, 2, 3}, {0, 1}};
  EXPECT_THROW(ValidatePartition(cfg, overlap), ConfigError);
  LayerPartition gap{{3}, {0, 1}};
  EXPECT_THROW(ValidatePartition(cfg, gap), ConfigError);
  LayerPartition frozen_head{{2}, {0, 1, 3}};
  EXPECT_THROW(ValidatePartition(cfg, frozen_head), ConfigError);
}

TEST(PartitionTest, AggregatedLayersDropsLocalHead) {
  const ModelConfig cfg = TinyModel(4);
  const LayerPartition p = MakePartition(cfg, PartitionStrategy::TopK(1));
  EXPECT_EQ(AggregatedLayers(cfg, p, true), (std::set<int>{4, 5}));
  EXPECT_EQ(AggregatedLayers(cfg, p, false), (std::set<int>{4}));
  EXPECT_EQ(PartitionStrategy::TopK(3).ToString(), "top_k(3)");
  EXPECT_EQ(PartitionStrategy::All().ToString(), "all");
}

// DP

TEST(DpTest, CalibrateSigmaClosedForm) {
  const double expected = std::sqrt(2.0 * std::log(1.25 / 1e-5)) / 4.0;
  EXPECT_NEAR(CalibrateSigma(4.0, 1e-5, 1), expected, 1e-12);
  EXPECT_NEAR(CalibrateSigma(4.0, 1e-5, 1), 1.211, 1e-3);
  const double t10 = std::sqrt(2.0 * std::log(1.25 * 10 / 1e-5)) / (4.0 / 10);
  EXPECT_NEAR(CalibrateSigma(4.0, 1e-5, 10), t10, 1e-12);
  EXPECT_THROW(CalibrateSigma(0.0, 1e-5, 1), ConfigError);
  EXPECT_THROW(CalibrateSigma(1.0, 1.5, 1), ConfigError);
}

TEST(DpTest, ClipsToNormAndAverages) {
  GradSet<double> a, b;
  a[1].emplace("w", Tensor<double>({2}, {3.0, 4.0}));  // norm 5
  b[1].emplace("w", Tensor<double>({2}, {0.3, 0.4}));  // norm 0.5
  const std::vector<GradSet<double>> per = {a, b};
  Rng rng(1);
  const GradSet<double> out =
      DpPrivatize<double>(per, 1.0, 0.0, rng);
  EXPECT_NEAR(out.at(1).at("w")[0], (0.6 + 0.3) / 2, 1e-15);
  EXPECT_NEAR(out.at(1).at("w")[1], (0.8 + 0.4) / 2, 1e-15);
  EXPECT_NEAR(GlobalNorm(a), 5.0, 1e-15);
}

TEST(DpTest, SingleExamplePureClipping) {
  GradSet<double> g;
  g[1].emplace("w", Tensor<double>({4}, {6.0, 0.0, 8.0, 0.0}));  // norm 10
  const std::vector<GradSet<double>> per = {g};
  Rng rng(2);
  const GradSet<double> out = DpPrivatize<double>(per, 1.0, 0.0, rng);
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(out.at(1).at("w")[i], g.at(1).at("w")[i] / 10);
  }
}

TEST(DpTest, CalibrateSigmaMonotone) {
  EXPECT_NEAR(CalibrateSigma(2.0, 1e-5, 5), 2 * CalibrateSigma(4.0, 1e-5, 5),
              1e-12);
  EXPECT_GT(CalibrateSigma(4.0, 1e-5, 10), CalibrateSigma(4.0, 1e-5, 1));
  double prev = 1e300;
  for (double eps : {0.5, 1.0, 2.0, 8.0}) {
    const double s = CalibrateSigma(eps, 1e-5, 3);
    EXPECT_LT(s, prev);
    prev = s;
  }
}

TEST(DpTest, NoClipNoNoiseIsBitwisePlainMean) {
  const ModelConfig cfg = TinyModel(2);
  const ParamSet<float> p = InitParams<float>(cfg, 3);
  const std::vector<Sample> data = TinyData(cfg, 6, 4);
  const LayerPartition part = MakePartition(cfg, PartitionStrategy::TopK(1));
  const auto plain = LossAndGrads<float>(cfg, p, part, data, false);
  const auto each = LossAndGrads<float>(cfg, p, part, data, true);
  Rng rng(5);
  const GradSet<float> dp = DpPrivatize<float>(
      each.per_example, std::numeric_limits<double>::infinity(), 0.0, rng);
  EXPECT_TRUE(BitwiseEquals(dp, plain.grads));
}

TEST(DpTest, NoiseStdMatchesSigmaClipOverBatch) {
  const size_t n = 100000;
  const int batch = 4;
  std::vector<GradSet<double>> per(batch);
  for (auto& g : per) g[1].emplace("w", Tensor<double>({n}));
  Rng rng(6);
  const GradSet<double> out = DpPrivatize<double>(per, 1.0, 2.0, rng);
  double sum = 0, sq = 0;
  for (double v : out.at(1).at("w").values()) {
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double std = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(std, 2.0 * 1.0 / batch, 0.03 * 0.5);
}

TEST(DpTest, ConfigValidation) {
  DPConfig dp;
  dp.enabled = true;
  dp.clip_norm = 0.0;
  EXPECT_THROW(dp.Validate(), ConfigError);
  dp.clip_norm = 1.0;
  dp.noise_multiplier = -1.0;
  EXPECT_THROW(dp.Validate(), ConfigError);
  dp.noise_multiplier = 1.0;
  EXPECT_NO_THROW(dp.Validate());
}

// Client

TEST(ClientTest, LocalUpdateTouchesOnlyTrainableLayers) {
  const ModelConfig cfg = TinyModel(3);
  const ParamSet<float> global = InitParams<float>(cfg, 7);
  const std::vector<Sample> data = TinyData(cfg, 10, 8);
  const LayerPartition part = MakePartition(cfg, PartitionStrategy::TopK(1));
  TrainConfig tc;
  tc.batch_size = 4;
  tc.local_epochs = 2;
  tc.adamw.lr = 0.01;
  const auto r = LocalUpdate<float>(cfg, global, part, data, tc, DPConfig{},
                                    5, 2, 11, 12);
  EXPECT_EQ(r.steps, 2 * 3);
  EXPECT_EQ(r.update.weight, 10u);
  EXPECT_EQ(r.update.round, 5u);
  EXPECT_EQ(r.update.client_id, 2u);
  EXPECT_EQ(r.update.params.size(), 2u);
  EXPECT_EQ(r.update.params.count(3), 1u);
  EXPECT_EQ(r.update.params.count(4), 1u);
  EXPECT_FALSE(BitwiseEquals(r.update.params.at(3), global.at(3)));
  EXPECT_TRUE(r.local_head.empty());
  const auto again = LocalUpdate<float>(cfg, global, part, data, tc,
                                        DPConfig{}, 5, 2, 11, 12);
  EXPECT_TRUE(r.update.BitwiseEquals(again.update));
}

TEST(ClientTest, LocalHeadWhenNotAggregated) {
  const ModelConfig cfg = TinyModel(2);
  const ParamSet<float> global = InitParams<float>(cfg, 7);
  const std::vector<Sample> data = TinyData(cfg, 4, 9);
  const LayerPartition part = MakePartition(cfg, PartitionStrategy::TopK(1));
  TrainConfig tc;
  tc.head_aggregation = false;
  const auto r = LocalUpdate<float>(cfg, global, part, data, tc, DPConfig{},
                                    0, 0, 1, 2);
  EXPECT_EQ(r.update.params.size(), 1u);
  EXPECT_EQ(r.update.params.count(2), 1u);
  EXPECT_EQ(r.local_head.count("w_out"), 1u);
}

TEST(ClientTest, DpDegenerateMatchesNonPrivate) {
  const ModelConfig cfg = TinyModel(2);
  const ParamSet<float> global = InitParams<float>(cfg, 7);
  const std::vector<Sample> data = TinyData(cfg, 9, 10);
  const LayerPartition part = MakePartition(cfg, PartitionStrategy::All());
  TrainConfig tc;
  tc.batch_size = 4;
  DPConfig dp;
  dp.enabled = true;
  dp.clip_norm = std::numeric_limits<double>::infinity();
  dp.noise_multiplier = 0.0;
  const auto plain = LocalUpdate<float>(cfg, global, part, data, tc,
                                        DPConfig{}, 0, 0, 3, 4);
  const auto priv =
      LocalUpdate<float>(cfg, global, part, data, tc, dp, 0, 0, 3, 4);
  EXPECT_TRUE(plain.update.BitwiseEquals(priv.update));
}

TEST(ClientTest, ZeroLearningRateReturnsGlobal) {
  const ModelConfig cfg = TinyModel(2);
  const ParamSet<float> global = InitParams<float>(cfg, 7);
  const std::vector<Sample> data = TinyData(cfg, 5, 13);
  const LayerPartition part = MakePartition(cfg, PartitionStrategy::TopK(1));
  TrainConfig tc;
  tc.adamw.lr = 0.0;
  const auto r = LocalUpdate<float>(cfg, global, part, data, tc, DPConfig{},
                                    0, 0, 1, 2);
  for (const auto& [id, group] : r.update.params) {
    EXPECT_TRUE(BitwiseEquals(group, global.at(id))) << id;
  }
}

TEST(ClientTest, OneClientRoundEqualsOneCentralStep) {
  const ModelConfig cfg = TinyModel(2);
  const ParamSet<double> global = InitParams<double>(cfg, 7);
  const std::vector<Sample> data = TinyData(cfg, 4, 14);
  const LayerPartition part = MakePartition(cfg, PartitionStrategy::TopK(1));
  TrainConfig tc;
  tc.batch_size = 4;
  tc.adamw.lr = 0.01;
  const auto r = LocalUpdate<double>(cfg, global, part, data, tc, DPConfig{},
                                     0, 0, 1, 2);
  const std::vector<ClientUpdate<double>> one = {r.update};
  const ParamSet<double> fed =
      ApplyUpdate(global, Aggregate<double>(one), part.trainable);
  ParamSet<double> central = global;
  OptimizerState<double> state;
  const auto lg = LossAndGrads<double>(cfg, central, part, data, false);
  AdamWStep(state, central, lg.grads, tc.adamw);
  EXPECT_LT(MaxAbsDiff(fed, central), 1e-10);
}

TEST(ClientTest, EmptyDatasetIsRejected) {
  const ModelConfig cfg = TinyModel(1);
  const ParamSet<float> global = InitParams<float>(cfg, 7);
  const LayerPartition part = MakePartition(cfg, PartitionStrategy::TopK(1));
  EXPECT_THROW(LocalUpdate<float>(cfg, global, part, {}, TrainConfig{},
                                  DPConfig{}, 0, 0, 1, 2),
               Error);
}

// Aggregation

TEST(AggregationTest, HandExample) {
  ClientUpdate<double> a, b;
  a.weight = 1;
  b.weight = 3;
  a.params[1].emplace("w", Tensor<double>({1}, {2.0}));
  b.params[1].emplace("w", Tensor<double>({1}, {6.0}));
  const std::vector<ClientUpdate<double>> ups = {a, b};
  EXPECT_EQ(Aggregate<double>(ups).at(1).at("w")[0], 5.0);
}

TEST(AggregationTest, ApplyingCurrentValuesIsIdentity) {
  Rng rng(25);
  const ParamSet<double> global = RandomSet(rng, {3, 2, 4});
  AggregatedTrainables<double> agg;
  agg[1] = global.at(1);
  agg[2] = global.at(2);
  const ParamSet<double> out = ApplyUpdate(global, agg, {1, 2});
  EXPECT_TRUE(BitwiseEquals(out, global));
  EXPECT_EQ(Checksum(out, {0}), Checksum(global, {0}));
}

TEST(AggregationTest, MatchesBruteForceWeightedMean) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int clients = 1 + static_cast<int>(rng.UniformInt(8));
    const std::vector<size_t> sizes = {1 + rng.UniformInt(5),
                                       1 + rng.UniformInt(5)};
    std::vector<ClientUpdate<double>> updates;
    for (int c = 0; c < clients; ++c) {
      ClientUpdate<double> u;
      u.client_id = c;
      u.weight = 1 + rng.UniformInt(100);
      u.params = RandomSet(rng, sizes);
      updates.push_back(u);
    }
    const auto agg = Aggregate<double>(updates);
    for (int id = 0; id < 2; ++id) {
      for (size_t i = 0; i < sizes[id]; ++i) {
        double num = 0, den = 0;
        for (const auto& u : updates) {
          num += static_cast<double>(u.weight) * u.params.at(id).at("w")[i];
          den += static_cast<double>(u.weight);
        }
        EXPECT_NEAR(agg.at(id).at("w")[i], num / den, 1e-12);
      }
    }
  }
}

TEST(AggregationTest, SingleClientPassesThrough) {
  Rng rng(22);
  ClientUpdate<float> u;
  u.weight = 7;
  u.params = CastTensors<float>(RandomSet(rng, {4, 3}));
  const std::vector<ClientUpdate<float>> one = {u};
  EXPECT_TRUE(BitwiseEquals(Aggregate<float>(one), u.params));
}

TEST(AggregationTest, RejectsMismatchedUpdates) {
  Rng rng(23);
  ClientUpdate<double> a, b;
  a.weight = b.weight = 1;
  a.params = RandomSet(rng, {2});
  b.params = RandomSet(rng, {3});
  const std::vector<ClientUpdate<double>> bad = {a, b};
  EXPECT_THROW(Aggregate<double>(bad), ProtocolError);
  EXPECT_THROW(Aggregate<double>({}), ProtocolError);
  b.params = a.params;
  b.weight = 0;
  const std::vector<ClientUpdate<double>> zero = {b};
  EXPECT_THROW(Aggregate<double>(zero), ProtocolError);
}

TEST(AggregationTest, ApplyUpdateReplacesOnlyAggregatedLayers) {
  Rng rng(24);
  const ParamSet<double> global = RandomSet(rng, {3, 3, 3});
  AggregatedTrainables<double> agg;
  agg[2] = RandomSet(rng, {3, 3, 3}).at(2);
  const ParamSet<double> out = ApplyUpdate(global, agg, {2});
  EXPECT_TRUE(BitwiseEquals(out.at(0), global.at(0)));
  EXPECT_TRUE(BitwiseEquals(out.at(1), global.at(1)));
  EXPECT_TRUE(BitwiseEquals(out.at(2), agg.at(2)));
  EXPECT_THROW(ApplyUpdate(global, agg, {1, 2}), ProtocolError);
}

// Secure aggregation

struct Cohort {
  std::vector<uint32_t> ids;
  PairSeeds seeds;
  std::vector<ClientUpdate<double>> updates;
  uint64_t total_weight = 0;
};

Cohort MakeCohort(Rng& rng, int n, const std::vector<size_t>& sizes) {
  Cohort c;
  for (int i = 0; i < n; ++i) c.ids.push_back(static_cast<uint32_t>(3 * i + 1));
  for (size_t a = 0; a < c.ids.size(); ++a) {
    for (size_t b = a + 1; b < c.ids.size(); ++b) {
      c.seeds[{c.ids[a], c.ids[b]}] = rng.NextU64();
    }
  }
  for (uint32_t id : c.ids) {
    ClientUpdate<double> u;
    u.client_id = id;
    u.weight = 1 + rng.UniformInt(50);
    u.params = RandomSet(rng, sizes);
    c.total_weight += u.weight;
    c.updates.push_back(u);
  }
  return c;
}

TEST(SecureAggTest, CohortOfOneIsUnmasked) {
  Rng rng(34);
  const Cohort c = MakeCohort(rng, 1, {5});
  EXPECT_TRUE(MaskUpdate(c.updates[0], c.ids, c.seeds, kDefaultQuantScale)
                  .BitwiseEquals(
                      QuantizeUpdate(c.updates[0], kDefaultQuantScale)));
}

TEST(SecureAggTest, PairMasksCancel) {
  const std::vector<uint64_t> m = PairMaskStream(77, 64);
  ClientUpdate<double> zero;
  zero.weight = 1;
  zero.params[1].emplace("w", Tensor<double>({64}));
  PairSeeds seeds;
  seeds[{1, 2}] = 77;
  const std::vector<uint32_t> cohort = {1, 2};
  zero.client_id = 1;
  const MaskedUpdate a = MaskUpdate(zero, cohort, seeds, 1.0);
  zero.client_id = 2;
  const MaskedUpdate b = MaskUpdate(zero, cohort, seeds, 1.0);
  for (size_t i = 0; i < 64; ++i) {
    EXPECT_EQ(a.params.at(1).at("w")[i], m[i]);
    EXPECT_EQ(a.params.at(1).at("w")[i] + b.params.at(1).at("w")[i], 0u);
  }
}

// A masked zero update should look uniform: every byte value appears at a
// near-uniform rate and the empirical byte entropy is close to 8 bits.
TEST(SecureAggTest, MaskedPayloadLooksUniform) {
  Rng rng(35);
  ClientUpdate<double> zero;
  zero.client_id = 1;
  zero.weight = 1;
  zero.params[1].emplace("w", Tensor<double>({20000}));
  PairSeeds seeds;
  seeds[{1, 2}] = rng.NextU64();
  const std::vector<uint32_t> cohort = {1, 2};
  const MaskedUpdate m = MaskUpdate(zero, cohort, seeds, kDefaultQuantScale);
  std::vector<double> counts(256, 0.0);
  uint64_t high_bits = 0;
  for (uint64_t v : m.params.at(1).at("w").values()) {
    for (int b = 0; b < 8; ++b) counts[(v >> (8 * b)) & 0xFF] += 1;
    high_bits += v >> 63;
  }
  double entropy = 0;
  for (double c : counts) {
    const double p = c / (20000.0 * 8);
    if (p > 0) entropy -= p * std::log2(p);
  }
  EXPECT_GT(entropy, 7.99);
  EXPECT_NEAR(high_bits / 20000.0, 0.5, 0.02);
}

TEST(SecureAggTest, MasksCancelExactly) {
  Rng rng(31);
  const Cohort c = MakeCohort(rng, 5, {6, 4});
  std::vector<MaskedUpdate> masked, plain;
  for (const auto& u : c.updates) {
    masked.push_back(MaskUpdate(u, c.ids, c.seeds, kDefaultQuantScale));
    plain.push_back(QuantizeUpdate(u, kDefaultQuantScale));
  }
  EXPECT_FALSE(masked[0].BitwiseEquals(plain[0]));
  for (int id = 0; id < 2; ++id) {
    for (size_t i = 0; i < masked[0].params.at(id).at("w").size(); ++i) {
      uint64_t sm = 0, sp = 0;
      for (size_t k = 0; k < masked.size(); ++k) {
        sm += masked[k].params.at(id).at("w")[i];
        sp += plain[k].params.at(id).at("w")[i];
      }
      EXPECT_EQ(sm, sp);
    }
  }
}

TEST(SecureAggTest, WithinQuantizationBoundOfPlainAggregate) {
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.UniformInt(10));
    const Cohort c = MakeCohort(rng, n, {16, 5});
    std::vector<MaskedUpdate> masked;
    for (const auto& u : c.updates) {
      masked.push_back(MaskUpdate(u, c.ids, c.seeds, kDefaultQuantScale));
    }
    const auto secure = SecureAggregate<double>(masked, c.ids, c.total_weight,
                                                kDefaultQuantScale);
    const auto plain = Aggregate<double>(c.updates);
    const double bound =
        n / (2.0 * kDefaultQuantScale * static_cast<double>(c.total_weight));
    EXPECT_LE(MaxAbsDiff(secure, plain), bound);
  }
}

TEST(SecureAggTest, QuantizesNegativeValuesTwosComplement) {
  ClientUpdate<double> u;
  u.weight = 2;
  u.params[1].emplace("w", Tensor<double>({2}, {-1.5, 0.25}));
  const MaskedUpdate q = QuantizeUpdate(u, 4.0);
  EXPECT_EQ(q.params.at(1).at("w")[0], static_cast<uint64_t>(-12));
  EXPECT_EQ(q.params.at(1).at("w")[1], 2u);
}

TEST(SecureAggTest, PairSeedLookupAndStreams) {
  PairSeeds seeds;
  seeds[{1, 2}] = 99;
  EXPECT_EQ(LookupPairSeed(seeds, 2, 1), 99u);
  EXPECT_THROW(LookupPairSeed(seeds, 1, 3), ProtocolError);
  seeds[{2, 1}] = 98;
  EXPECT_THROW(LookupPairSeed(seeds, 1, 2), ProtocolError);
  EXPECT_EQ(PairMaskStream(5, 8), PairMaskStream(5, 8));
  EXPECT_NE(PairMaskStream(5, 8), PairMaskStream(6, 8));
  const std::vector<uint64_t> longer = PairMaskStream(5, 12);
  EXPECT_TRUE(std::equal(longer.begin(), longer.begin() + 8,
                         PairMaskStream(5, 8).begin()));
}

TEST(SecureAggTest, MissingCohortMemberBreaksTheSum) {
  Rng rng(33);
  const Cohort c = MakeCohort(rng, 3, {4});
  std::vector<MaskedUpdate> masked;
  for (const auto& u : c.updates) {
    masked.push_back(MaskUpdate(u, c.ids, c.seeds, kDefaultQuantScale));
  }
  masked.pop_back();
  EXPECT_THROW(SecureAggregate<double>(masked, c.ids, c.total_weight,
                                       kDefaultQuantScale),
               ProtocolError);
}

}  // namespace
}  // namespace lsfl
