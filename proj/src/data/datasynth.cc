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

#include "lsfl/datasynth.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "lsfl/error.h"
#include "lsfl/tensor.h"

namespace lsfl {
namespace {

struct Generated {
  std::vector<int32_t> tokens;
  std::vector<int32_t> tags;
};

int SampleType(Rng& rng, const std::vector<double>& probs) {
  const double u = rng.Uniform();
  double acc = 0.0;
  for (size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size()) - 1;
}

Generated GenerateSequence(Rng& rng, const GrammarConfig& g,
                           const std::vector<double>& type_probs) {
  Generated out;
  const int n = g.seq_len;
  const int filler_count = g.vocab_size - g.filler_begin();
  auto filler = [&] {
    return static_cast<int32_t>(g.filler_begin() + rng.UniformInt(filler_count));
  };
  int pos = 0;
  while (pos < n) {
    if (rng.Uniform() < g.entity_rate) {
      const int type = SampleType(rng, type_probs);
      const int len = std::min(SampleSpanLength(rng, g.mean_span_len), n - pos);
      const int first = static_cast<int>(rng.UniformInt(g.lexicon_size));
      for (int i = 0; i < len; ++i) {
        int32_t token;
        if (i > 0 && g.num_shared > 0 && rng.Uniform() < g.shared_rate) {
          token = static_cast<int32_t>(g.num_types * g.lexicon_size +
                                       rng.UniformInt(g.num_shared));
        } else if (g.ordered_spans) {
          token = static_cast<int32_t>(type * g.lexicon_size +
                                       (first + i) % g.lexicon_size);
        } else {
          token = static_cast<int32_t>(
              type * g.lexicon_size +
              (i == 0 ? first : rng.UniformInt(g.lexicon_size)));
        }
        out.tokens.push_back(token);
        out.tags.push_back(i == 0 ? TagB(type) : TagI(type));
      }
      pos += len;
      if (pos < n) {
        out.tokens.push_back(filler());
        out.tags.push_back(TagO());
        ++pos;
      }
    } else {
      out.tokens.push_back(filler());
      out.tags.push_back(TagO());
      ++pos;
    }
  }
  return out;
}

}  // namespace

void GrammarConfig::Validate() const {
  if (num_types < 1) throw ConfigError("grammar.num_types must be >= 1");
  if (lexicon_size < 1) throw ConfigError("grammar.lexicon_size must be >= 1");
  if (num_shared < 0) throw ConfigError("grammar.num_shared must be >= 0");
  if (vocab_size < filler_begin() + 1) {
    throw ConfigError("grammar.vocab_size " + std::to_string(vocab_size) +
                      " < K*m + shared + 1 = " +
                      std::to_string(filler_begin() + 1));
  }
  if (seq_len < 1) throw ConfigError("grammar.seq_len must be >= 1");
  if (!(entity_rate >= 0.0 && entity_rate <= 1.0)) {
    throw ConfigError("grammar.entity_rate must lie in [0, 1]");
  }
  if (!(mean_span_len >= 1.0)) {
    throw ConfigError("grammar.mean_span_len must be >= 1");
  }
  if (!(shared_rate >= 0.0 && shared_rate <= 1.0)) {
    throw ConfigError("grammar.shared_rate must lie in [0, 1]");
  }
  if (!type_probs.empty()) {
    if (static_cast<int>(type_probs.size()) != num_types) {
      throw ConfigError("grammar.type_probs needs one entry per type");
    }
    double sum = 0.0;
    for (double p : type_probs) {
      if (!(p >= 0.0)) throw ConfigError("grammar.type_probs must be >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("grammar.type_probs must sum to 1");
    }
  }
}

int GrammarConfig::LexiconOf(int32_t token) const {
  if (token < 0 || token >= num_types * lexicon_size) return -1;
  return token / lexicon_size;
}

bool GrammarConfig::IsShared(int32_t token) const {
  return token >= num_types * lexicon_size && token < filler_begin();
}

std::vector<double> GrammarConfig::TypeProbs() const {
  if (!type_probs.empty()) return type_probs;
  return std::vector<double>(num_types, 1.0 / num_types);
}

std::string GrammarConfig::ToString() const {
  std::ostringstream os;
  os.precision(17);
  os << "V=" << vocab_size << ";K=" << num_types << ";m=" << lexicon_size
     << ";shared=" << num_shared << ";n=" << seq_len
     << ";rate=" << entity_rate << ";span=" << mean_span_len
     << ";shared_rate=" << shared_rate << ";ordered=" << ordered_spans
     << ";probs=";
  for (double p : TypeProbs()) os << p << ",";
  return os.str();
}

uint64_t GrammarConfig::Hash() const { return Fnv1a64(ToString()); }

int NumTags(int num_types) { return 2 * num_types + 1; }

bool IsValidBio(std::span<const int32_t> tags, int num_types) {
  int32_t prev = TagO();
  for (int32_t t : tags) {
    if (t < 0 || t >= NumTags(num_types)) return false;
    if (t != TagO() && t % 2 == 0) {
      const int type = (t - 2) / 2;
      if (prev != TagB(type) && prev != TagI(type)) return false;
    }
    prev = t;
  }
  return true;
}

int SampleSpanLength(Rng& rng, double mean_span_len) {
  const double p = 1.0 / mean_span_len;
  int len = 1;
  while (rng.Uniform() >= p) ++len;
  return len;
}

std::vector<std::vector<int32_t>> GenCorpus(uint64_t seed, int n_seqs,
                                            const GrammarConfig& grammar) {
  grammar.Validate();
  Rng rng(seed);
  const auto probs = grammar.TypeProbs();
  std::vector<std::vector<int32_t>> corpus;
  corpus.reserve(n_seqs);
  for (int i = 0; i < n_seqs; ++i) {
    corpus.push_back(GenerateSequence(rng, grammar, probs).tokens);
  }
  return corpus;
}

std::vector<TaggingExample> GenTagging(uint64_t seed, int n_seqs,
                                       const GrammarConfig& grammar) {
  grammar.Validate();
  Rng rng(seed);
  const auto probs = grammar.TypeProbs();
  std::vector<TaggingExample> out;
  out.reserve(n_seqs);
  for (int i = 0; i < n_seqs; ++i) {
    Generated g = GenerateSequence(rng, grammar, probs);
    out.push_back({std::move(g.tokens), std::move(g.tags)});
  }
  return out;
}

std::vector<uint8_t> LabelsFromTokens(std::span<const int32_t> tokens,
                                      const GrammarConfig& grammar) {
  std::vector<uint8_t> labels(grammar.num_types, 0);
  for (int32_t t : tokens) {
    const int k = grammar.LexiconOf(t);
    if (k >= 0) labels[k] = 1;
  }
  return labels;
}

std::vector<MultilabelExample> GenMultilabel(uint64_t seed, int n_docs,
                                             const GrammarConfig& grammar) {
  grammar.Validate();
  Rng rng(seed);
  const auto probs = grammar.TypeProbs();
  std::vector<MultilabelExample> out;
  out.reserve(n_docs);
  for (int i = 0; i < n_docs; ++i) {
    Generated g = GenerateSequence(rng, grammar, probs);
    std::vector<uint8_t> labels = LabelsFromTokens(g.tokens, grammar);
    out.push_back({std::move(g.tokens), std::move(labels)});
  }
  return out;
}

Sample ToSample(const TaggingExample& ex) {
  return Sample{ex.tokens, ex.tags, {}};
}

Sample ToSample(const MultilabelExample& ex) {
  return Sample{ex.tokens, {}, ex.labels};
}

std::vector<Sample> ToSamples(std::span<const TaggingExample> data) {
  std::vector<Sample> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(ToSample(ex));
  return out;
}

std::vector<Sample> ToSamples(std::span<const MultilabelExample> data) {
  std::vector<Sample> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(ToSample(ex));
  return out;
}

Sample MaskForMlm(std::span<const int32_t> tokens, int32_t mask_token,
                  double rate, Rng& rng) {
  Sample s;
  s.tokens.assign(tokens.begin(), tokens.end());
  s.targets.assign(tokens.size(), -1);
  auto corrupt = [&](size_t i) {
    s.targets[i] = tokens[i];
    const double u = rng.Uniform();
    if (u < 0.8) {
      s.tokens[i] = mask_token;
    } else if (u < 0.9) {
      s.tokens[i] = static_cast<int32_t>(rng.UniformInt(mask_token));
    }
  };
  bool any = false;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (rng.Uniform() < rate) {
      corrupt(i);
      any = true;
    }
  }
  if (!any && !tokens.empty()) corrupt(rng.UniformInt(tokens.size()));
  return s;
}

int DominantType(const Sample& sample, const GrammarConfig& grammar) {
  std::vector<int> counts(grammar.num_types, 0);
  for (int32_t t : sample.tokens) {
    const int k = grammar.LexiconOf(t);
    if (k >= 0) ++counts[k];
  }
  int best = grammar.num_types;
  int best_count = 0;
  for (int k = 0; k < grammar.num_types; ++k) {
    if (counts[k] > best_count) {
      best = k;
      best_count = counts[k];
    }
  }
  return best;
}

std::vector<double> SampleDirichlet(std::span<const double> concentration,
                                    Rng& rng) {
  std::vector<double> logs(concentration.size(),
                           -std::numeric_limits<double>::infinity());
  double mx = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < concentration.size(); ++k) {
    if (concentration[k] > 0.0) {
      logs[k] = rng.LogGamma(concentration[k]);
      mx = std::max(mx, logs[k]);
    }
  }
  std::vector<double> p(concentration.size(), 0.0);
  if (!std::isfinite(mx)) return p;
  double sum = 0.0;
  for (size_t k = 0; k < p.size(); ++k) {
    if (std::isfinite(logs[k])) {
      p[k] = std::exp(logs[k] - mx);
      sum += p[k];
    }
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<ClientDataset> PartitionClients(std::span<const Sample> data,
                                            const GrammarConfig& grammar,
                                            int num_clients, double alpha,
                                            uint64_t seed) {
  if (num_clients < 1) throw ConfigError("number of clients must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("Dirichlet alpha must be > 0");
  if (static_cast<size_t>(num_clients) > data.size()) {
    throw ConfigError("more clients (" + std::to_string(num_clients) +
                      ") than examples (" + std::to_string(data.size()) + ")");
  }
  const int num_buckets = grammar.num_types + 1;
  Rng rng(seed);

  std::vector<std::vector<size_t>> pools(num_buckets);
  for (size_t i = 0; i < data.size(); ++i) {
    pools[DominantType(data[i], grammar)].push_back(i);
  }
  for (auto& pool : pools) {
    for (size_t i = pool.size(); i > 1; --i) {
      std::swap(pool[i - 1], pool[rng.UniformInt(i)]);
    }
  }
  std::vector<double> concentration(num_buckets);
  for (int k = 0; k < num_buckets; ++k) {
    concentration[k] = alpha * static_cast<double>(pools[k].size()) /
                       static_cast<double>(data.size());
  }
  std::vector<std::vector<double>> mix(num_clients);
  for (auto& m : mix) m = SampleDirichlet(concentration, rng);

  std::vector<size_t> quota(num_clients, data.size() / num_clients);
  for (size_t c = 0; c < data.size() % num_clients; ++c) ++quota[c];

  std::vector<ClientDataset> clients(num_clients);
  for (int c = 0; c < num_clients; ++c) {
    clients[c].client_id = static_cast<uint32_t>(c);
    clients[c].type_histogram.assign(num_buckets, 0);
  }
  size_t remaining = data.size();
  std::vector<double> weights(num_buckets);
  while (remaining > 0) {
    for (int c = 0; c < num_clients; ++c) {
      if (clients[c].examples.size() >= quota[c]) continue;
      double total = 0.0;
      for (int k = 0; k < num_buckets; ++k) {
        weights[k] = pools[k].empty() ? 0.0 : mix[c][k];
        total += weights[k];
      }
      if (!(total > 0.0)) {
        // The client's preferred types are exhausted; fall back to the
        // remaining pool sizes.
        for (int k = 0; k < num_buckets; ++k) {
          weights[k] = static_cast<double>(pools[k].size());
          total += weights[k];
        }
      }
      const double u = rng.Uniform() * total;
      double acc = 0.0;
      int pick = -1;
      for (int k = 0; k < num_buckets; ++k) {
        if (weights[k] <= 0.0) continue;
        acc += weights[k];
        pick = k;
        if (u < acc) break;
      }
      const size_t idx = pools[pick].back();
      pools[pick].pop_back();
      clients[c].examples.push_back(data[idx]);
      ++clients[c].type_histogram[pick];
      --remaining;
    }
  }
  return clients;
}

}  // namespace lsfl
