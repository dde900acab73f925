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

#include "lsfl/orchestrator.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <thread>
#include <variant>

#include "lsfl/aggregation.h"
#include "lsfl/byte_io.h"
#include "lsfl/rng.h"
#include "lsfl/wire.h"

namespace lsfl {
namespace {

// Runs fn(0..n-1) on up to `threads` workers. Each index writes only its own
// result slot, so the outcome does not depend on the schedule.
void ForEachIndex(size_t n, int threads, const std::function<void(size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const size_t workers = std::min<size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void CheckParams(const ModelConfig& cfg, const ParamSet<float>& params,
                 int last_layer) {
  for (int id = 0; id <= last_layer; ++id) {
    auto it = params.find(id);
    if (it == params.end()) {
      throw ConfigError("parameters lack layer " + std::to_string(id));
    }
    for (const auto& [name, shape] : GroupLayout(cfg, id)) {
      auto t = it->second.find(name);
      if (t == it->second.end() || t->second.shape() != shape) {
        throw ConfigError("parameter " + name + " of layer " +
                          std::to_string(id) + " does not match the model");
      }
    }
  }
}

std::optional<double> MeanOf(const std::vector<std::optional<double>>& xs) {
  double sum = 0.0;
  int n = 0;
  for (const auto& x : xs) {
    if (x) {
      sum += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

Metrics MeanMetrics(const std::vector<Metrics>& all) {
  std::vector<std::optional<double>> micro, macro, auc;
  for (const Metrics& m : all) {
    micro.push_back(m.micro_f1);
    macro.push_back(m.macro_f1);
    auc.push_back(m.auc);
  }
  Metrics out;
  out.micro_f1 = MeanOf(micro);
  out.macro_f1 = MeanOf(macro);
  out.auc = MeanOf(auc);
  return out;
}

bool ShouldEvaluate(const FederationConfig& fc, int round) {
  return round == fc.rounds || round % fc.eval_every == 0;
}

uint64_t FrozenChecksum(const ParamSet<float>& params,
                        const LayerPartition& partition) {
  if (partition.frozen.empty()) return 0;
  return Checksum(params, std::vector<int>(partition.frozen.begin(),
                                           partition.frozen.end()));
}

std::set<int> AllLayers(const ModelConfig& cfg) {
  std::set<int> ids;
  for (int id = 0; id <= cfg.head_layer(); ++id) ids.insert(id);
  return ids;
}

PairSeeds MakePairSeeds(uint64_t master, uint32_t round,
                        std::span<const uint32_t> cohort) {
  PairSeeds seeds;
  for (size_t a = 0; a < cohort.size(); ++a) {
    for (size_t b = a + 1; b < cohort.size(); ++b) {
      const uint64_t per_client =
          DeriveSeed(master, SeedRole::kMask, RoundClientIndex(round, cohort[a]));
      seeds[{cohort[a], cohort[b]}] =
          DeriveSeed(per_client, SeedRole::kMask, cohort[b]);
    }
  }
  return seeds;
}

// Sorted positions (into `clients`) of the round's participants.
std::vector<size_t> SampleCohort(const FederationConfig& fc, size_t n,
                                 uint32_t round) {
  const size_t m = std::clamp<size_t>(
      static_cast<size_t>(std::ceil(fc.client_fraction * n - 1e-12)), 1, n);
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  if (m < n) {
    Rng rng(DeriveSeed(fc.master_seed, SeedRole::kSampling, round));
    for (size_t i = 0; i < m; ++i) {
      std::swap(idx[i], idx[i + rng.UniformInt(n - i)]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

// Trains alone on `data` for fc.rounds rounds with `client_id`'s seeds.
History TrainAlone(const FederationConfig& fc, const ParamSet<float>& initial,
                   std::span<const Sample> data, std::span<const Sample> test,
                   uint32_t client_id) {
  fc.Validate();
  const ModelConfig& cfg = fc.model;
  CheckParams(cfg, initial, cfg.head_layer());
  if (data.empty()) throw InputError("training data is empty");
  const LayerPartition partition = MakePartition(cfg, fc.strategy);
  TrainConfig tc = fc.train;
  tc.head_aggregation = true;
  const std::set<int> trained = AggregatedLayers(cfg, partition, true);

  History h;
  ParamSet<float> params = initial;
  for (int r = 1; r <= fc.rounds; ++r) {
    const uint32_t round = static_cast<uint32_t>(r);
    const uint64_t index = RoundClientIndex(round, client_id);
    auto res = LocalUpdate<float>(
        cfg, params, partition, data, tc, fc.dp, round, client_id,
        DeriveSeed(fc.master_seed, SeedRole::kClient, index),
        DeriveSeed(fc.master_seed, SeedRole::kDp, index));
    for (int id : trained) params[id] = std::move(res.update.params.at(id));
    h.frozen_checksums.push_back(FrozenChecksum(params, partition));
    if (ShouldEvaluate(fc, r)) {
      RoundMetrics rm;
      rm.round = r;
      rm.metrics = EvaluateModel(cfg, params, test);
      rm.loss = res.mean_loss;
      h.rounds.push_back(std::move(rm));
    }
  }
  h.final_params = std::move(params);
  return h;
}

std::string FormatOptional(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", *v);
  return buf;
}

}  // namespace

uint64_t RoleConstant(SeedRole role) {
  switch (role) {
    case SeedRole::kClient:
      return 0x636C69656E740000ULL;
    case SeedRole::kData:
      return 0x6461746100000000ULL;
    case SeedRole::kInit:
      return 0x696E697400000000ULL;
    case SeedRole::kDp:
      return 0x6470000000000000ULL;
    case SeedRole::kMask:
      return 0x6D61736B00000000ULL;
    case SeedRole::kSampling:
      return 0x73616D706C650000ULL;
  }
  throw InternalError("unknown seed role");
}

uint64_t DeriveSeed(uint64_t master, SeedRole role, uint64_t index) {
  return SplitMix64(master ^ RoleConstant(role) ^ index);
}

void FederationConfig::Validate() const {
  model.Validate();
  if (rounds < 1) throw ConfigError("fed.rounds must be >= 1");
  if (!(client_fraction > 0.0 && client_fraction <= 1.0)) {
    throw ConfigError("fed.client_fraction must be in (0, 1]");
  }
  if (eval_every < 1) throw ConfigError("fed.eval_every must be >= 1");
  if (!(quant_scale > 0.0)) throw ConfigError("secagg.scale must be > 0");
  if (threads < 1) throw ConfigError("run.threads must be >= 1");
  train.Validate();
  if (dp.enabled) dp.Validate();
}

ParamSet<float> RunPretraining(const ModelConfig& cfg,
                               std::span<const std::vector<int32_t>> corpus,
                               int64_t steps, uint64_t seed,
                               const PretrainConfig& pc) {
  cfg.Validate();
  if (cfg.task != TaskKind::kMlm) {
    throw ConfigError("pretraining needs an mlm model config");
  }
  if (corpus.empty()) throw InputError("pretraining corpus is empty");
  if (pc.batch_size < 1) throw ConfigError("pretrain.batch_size must be >= 1");
  ParamSet<float> params = InitParams<float>(cfg, seed);
  const LayerPartition partition = MakePartition(cfg, PartitionStrategy::All());
  const int32_t mask_token = cfg.vocab_size - 1;
  Rng rng(DeriveSeed(seed, SeedRole::kData, 0));
  OptimizerState<float> state;
  std::vector<Sample> batch;
  for (int64_t step = 0; step < steps; ++step) {
    batch.clear();
    for (int b = 0; b < pc.batch_size; ++b) {
      const auto& seq = corpus[rng.UniformInt(corpus.size())];
      batch.push_back(MaskForMlm(seq, mask_token, pc.mask_rate, rng));
    }
    auto lg = LossAndGrads<float>(cfg, params, partition, batch, false);
    AdamWStep(state, params, lg.grads, pc.adamw);
  }
  return params;
}

double MlmLoss(const ModelConfig& cfg, const ParamSet<float>& params,
               std::span<const std::vector<int32_t>> corpus, uint64_t seed,
               double mask_rate) {
  if (corpus.empty()) throw InputError("corpus is empty");
  Rng rng(seed);
  double sum = 0.0;
  for (const auto& seq : corpus) {
    const Sample s = MaskForMlm(seq, cfg.vocab_size - 1, mask_rate, rng);
    sum += Loss<float>(cfg, params, std::span<const Sample>(&s, 1));
  }
  return sum / static_cast<double>(corpus.size());
}

ParamSet<float> AttachHead(const ParamSet<float>& backbone,
                           const ModelConfig& task_cfg, uint64_t seed) {
  task_cfg.Validate();
  CheckParams(task_cfg, backbone, task_cfg.n_blocks);
  ParamSet<float> params;
  for (int id = 0; id <= task_cfg.n_blocks; ++id) params[id] = backbone.at(id);
  params[task_cfg.head_layer()] = InitHead<float>(task_cfg, seed);
  return params;
}

Metrics EvaluateModel(const ModelConfig& cfg, const ParamSet<float>& params,
                      std::span<const Sample> test) {
  if (test.empty()) throw InputError("test set is empty");
  switch (cfg.task) {
    case TaskKind::kTagging: {
      std::vector<std::vector<int32_t>> pred, gold;
      pred.reserve(test.size());
      gold.reserve(test.size());
      const size_t out = cfg.OutputDim();
      for (const Sample& s : test) {
        const Tensor<float> logits = ForwardSample(cfg, params, s);
        std::vector<int32_t> p(s.tokens.size());
        for (size_t i = 0; i < p.size(); ++i) {
          const float* row = logits.data() + i * out;
          p[i] = static_cast<int32_t>(std::max_element(row, row + out) - row);
        }
        pred.push_back(std::move(p));
        gold.push_back(s.targets);
      }
      return EvaluateTagging(pred, gold, cfg.OutputDim());
    }
    case TaskKind::kMultilabel: {
      std::vector<std::vector<double>> scores;
      std::vector<std::vector<uint8_t>> gold;
      for (const Sample& s : test) {
        const Tensor<float> logits = ForwardSample(cfg, params, s);
        std::vector<double> p(cfg.num_types);
        for (int k = 0; k < cfg.num_types; ++k) {
          p[k] = 1.0 / (1.0 + std::exp(-static_cast<double>(logits[k])));
        }
        scores.push_back(std::move(p));
        gold.push_back(s.labels);
      }
      return EvaluateMultilabel(scores, gold, cfg.num_types);
    }
    case TaskKind::kMlm:
      break;
  }
  throw ConfigError("evaluation needs a tagging or multilabel model");
}

History RunFederation(const FederationConfig& fc,
                      const ParamSet<float>& initial,
                      std::span<const ClientDataset> clients,
                      std::span<const Sample> test) {
  fc.Validate();
  const ModelConfig& cfg = fc.model;
  CheckParams(cfg, initial, cfg.head_layer());
  if (clients.empty()) throw InputError("federation has no clients");
  for (const ClientDataset& c : clients) {
    if (c.examples.empty()) {
      throw InputError("client " + std::to_string(c.client_id) +
                       " has no examples");
    }
  }
  const LayerPartition partition = MakePartition(cfg, fc.strategy);
  const bool head_agg = fc.train.head_aggregation;
  const std::set<int> agg_layers = AggregatedLayers(cfg, partition, head_agg);
  const std::set<int> all_layers = AllLayers(cfg);
  const WireDType up_dtype =
      fc.secure_agg ? WireDType::kFixedU64 : WireDType::kF32;
  const uint64_t full_up_frame = FrameSize(cfg, all_layers, up_dtype);
  const uint64_t full_down_frame = FrameSize(cfg, all_layers, WireDType::kF32);
  const uint64_t partial_down_frame =
      FrameSize(cfg, agg_layers, WireDType::kF32);

  History h;
  ParamSet<float> global = initial;
  if (!head_agg) {
    for (const ClientDataset& c : clients) {
      h.client_heads[c.client_id] = initial.at(cfg.head_layer());
    }
  }
  std::vector<bool> seen(clients.size(), false);

  for (int r = 1; r <= fc.rounds; ++r) {
    const uint32_t round = static_cast<uint32_t>(r);
    try {
      const std::vector<size_t> cohort_pos =
          SampleCohort(fc, clients.size(), round);
      std::vector<uint32_t> cohort;
      for (size_t p : cohort_pos) cohort.push_back(clients[p].client_id);
      std::vector<uint32_t> sorted_cohort = cohort;
      std::sort(sorted_cohort.begin(), sorted_cohort.end());
      const PairSeeds pair_seeds =
          fc.secure_agg ? MakePairSeeds(fc.master_seed, round, sorted_cohort)
                        : PairSeeds{};

      const size_t m = cohort_pos.size();
      std::vector<LocalUpdateResult<float>> results(m);
      std::vector<std::vector<uint8_t>> frames(m);
      ForEachIndex(m, fc.threads, [&](size_t s) {
        const ClientDataset& c = clients[cohort_pos[s]];
        const uint64_t index = RoundClientIndex(round, c.client_id);
        const uint64_t shuffle_seed =
            DeriveSeed(fc.master_seed, SeedRole::kClient, index);
        const uint64_t noise_seed =
            DeriveSeed(fc.master_seed, SeedRole::kDp, index);
        if (head_agg) {
          results[s] = LocalUpdate<float>(cfg, global, partition, c.examples,
                                          fc.train, fc.dp, round, c.client_id,
                                          shuffle_seed, noise_seed);
        } else {
          ParamSet<float> start = global;
          start[cfg.head_layer()] = h.client_heads.at(c.client_id);
          results[s] = LocalUpdate<float>(cfg, start, partition, c.examples,
                                          fc.train, fc.dp, round, c.client_id,
                                          shuffle_seed, noise_seed);
        }
        const ClientUpdate<float>& u = results[s].update;
        frames[s] = fc.secure_agg
                        ? EncodeUpdate(MaskUpdate(u, sorted_cohort, pair_seeds,
                                                  fc.quant_scale))
                        : EncodeUpdate(u);
      });

      // Server side: everything it learns comes from the decoded frames.
      RoundMetrics rm;
      rm.round = r;
      AggregatedTrainables<float> agg;
      if (fc.secure_agg) {
        std::vector<MaskedUpdate> masked;
        uint64_t total_weight = 0;
        for (const auto& f : frames) {
          masked.push_back(std::get<MaskedUpdate>(DecodeUpdate(f)));
          total_weight += masked.back().weight;
        }
        agg = SecureAggregate<float>(masked, sorted_cohort, total_weight,
                                     fc.quant_scale);
      } else {
        std::vector<ClientUpdate<float>> updates;
        for (const auto& f : frames) {
          updates.push_back(std::get<ClientUpdate<float>>(DecodeUpdate(f)));
        }
        agg = Aggregate<float>(updates);
      }
      global = ApplyUpdate(global, agg, agg_layers);

      double loss_sum = 0.0;
      for (size_t s = 0; s < m; ++s) {
        rm.uplink_bytes += frames[s].size();
        rm.downlink_bytes +=
            seen[cohort_pos[s]] ? partial_down_frame : full_down_frame;
        seen[cohort_pos[s]] = true;
        loss_sum += results[s].mean_loss;
        if (!head_agg) {
          h.client_heads[cohort[s]] = std::move(results[s].local_head);
        }
      }
      rm.loss = loss_sum / static_cast<double>(m);
      rm.comm_fraction = static_cast<double>(rm.uplink_bytes) /
                         static_cast<double>(m * full_up_frame);
      h.total_uplink_bytes += rm.uplink_bytes;
      h.total_downlink_bytes += rm.downlink_bytes;
      h.frozen_checksums.push_back(FrozenChecksum(global, partition));

      if (ShouldEvaluate(fc, r)) {
        if (head_agg) {
          rm.metrics = EvaluateModel(cfg, global, test);
        } else {
          std::vector<Metrics> per_client;
          ParamSet<float> local = global;
          for (const auto& [id, head] : h.client_heads) {
            local[cfg.head_layer()] = head;
            per_client.push_back(EvaluateModel(cfg, local, test));
          }
          rm.metrics = MeanMetrics(per_client);
        }
        h.rounds.push_back(std::move(rm));
      }
    } catch (const ProtocolError& e) {
      throw ProtocolError("round " + std::to_string(r) + ": " + e.what());
    }
  }
  h.final_params = std::move(global);
  return h;
}

History RunCentralized(const FederationConfig& fc,
                       const ParamSet<float>& initial,
                       std::span<const Sample> data,
                       std::span<const Sample> test) {
  return TrainAlone(fc, initial, data, test, 0);
}

LocalOnlyResult RunLocalOnly(const FederationConfig& fc,
                             const ParamSet<float>& initial,
                             std::span<const ClientDataset> clients,
                             std::span<const Sample> test) {
  if (clients.empty()) throw InputError("no clients");
  LocalOnlyResult out;
  out.per_client.resize(clients.size());
  ForEachIndex(clients.size(), fc.threads, [&](size_t i) {
    out.per_client[i] = TrainAlone(fc, initial, clients[i].examples, test,
                                   clients[i].client_id);
  });
  const History& first = out.per_client.front();
  for (size_t j = 0; j < first.rounds.size(); ++j) {
    RoundMetrics rm;
    rm.round = first.rounds[j].round;
    std::vector<Metrics> ms;
    double loss = 0.0;
    for (const History& h : out.per_client) {
      ms.push_back(h.rounds[j].metrics);
      loss += h.rounds[j].loss;
    }
    rm.metrics = MeanMetrics(ms);
    rm.loss = loss / static_cast<double>(out.per_client.size());
    out.mean.rounds.push_back(std::move(rm));
  }
  return out;
}

std::optional<int> RoundsToFraction(std::span<const int> rounds,
                                    std::span<const double> values,
                                    double frac) {
  if (!(frac > 0.0 && frac <= 1.0)) {
    throw ConfigError("fraction must be in (0, 1]");
  }
  if (rounds.size() != values.size()) {
    throw InputError("rounds and values differ in length");
  }
  if (values.empty()) return std::nullopt;
  const double best = *std::max_element(values.begin(), values.end());
  const double threshold = frac * best;
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] >= threshold) return rounds[i];
  }
  // Unreachable for frac <= 1; keep the argmax fallback explicit.
  return rounds[std::max_element(values.begin(), values.end()) -
                values.begin()];
}

std::optional<int> RoundsToFraction(const History& h, double frac) {
  std::vector<int> rounds;
  std::vector<double> values;
  for (const RoundMetrics& rm : h.rounds) {
    rounds.push_back(rm.round);
    values.push_back(rm.metrics.micro_f1.value_or(0.0));
  }
  return RoundsToFraction(rounds, values, frac);
}

std::string HistoryCsv(const History& h) {
  std::string out = kHistoryCsvHeader;
  out += '\n';
  char buf[160];
  for (const RoundMetrics& rm : h.rounds) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%s,%s,%.6f,%llu,%llu,%.6f\n",
                  rm.round, FormatOptional(rm.metrics.micro_f1).c_str(),
                  FormatOptional(rm.metrics.macro_f1).c_str(),
                  FormatOptional(rm.metrics.auc).c_str(), rm.loss,
                  static_cast<unsigned long long>(rm.uplink_bytes),
                  static_cast<unsigned long long>(rm.downlink_bytes),
                  rm.comm_fraction);
    out += buf;
  }
  return out;
}

void WriteHistoryCsv(const History& h, const std::string& path) {
  const std::string csv = HistoryCsv(h);
  WriteFileBytes(path, std::span<const uint8_t>(
                           reinterpret_cast<const uint8_t*>(csv.data()),
                           csv.size()));
}

}  // namespace lsfl
