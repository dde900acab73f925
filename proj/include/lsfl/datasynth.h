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

#ifndef LSFL_DATASYNTH_H_
#define LSFL_DATASYNTH_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lsfl/model.h"
#include "lsfl/rng.h"

namespace lsfl {

// Token grammar for the synthetic clinical-text analogues.
//
// Ids [k*m, (k+1)*m) form the lexicon of entity type k (0-based), the next
// `num_shared` ids are shared modifiers that may continue a span of any
// type, and the remaining ids up to vocab_size are filler. A sequence is
// filler with entity spans inserted: at each free position a span starts
// with probability `entity_rate`, its type follows `type_probs`, its length
// is geometric with mean `mean_span_len` (clipped at the sequence end), and
// a filler token always follows a span that ends before the sequence does.
// With `ordered_spans` the lexicon tokens of a span step through the lexicon
// cyclically from a random first id (span position i uses id first + i);
// otherwise each continuation id is uniform.
struct GrammarConfig {
  int vocab_size = 48;
  int num_types = 3;
  int lexicon_size = 8;
  int num_shared = 0;
  int seq_len = 16;
  double entity_rate = 0.15;
  double mean_span_len = 2.0;
  // Probability that a continuation token comes from the shared lexicon.
  double shared_rate = 0.0;
  bool ordered_spans = true;
  // Empty means uniform over types.
  std::vector<double> type_probs;

  void Validate() const;
  // Token id of the first filler token.
  int filler_begin() const { return num_types * lexicon_size + num_shared; }
  // Entity type of `token`, or -1 for shared/filler tokens.
  int LexiconOf(int32_t token) const;
  bool IsShared(int32_t token) const;
  std::vector<double> TypeProbs() const;
  // FNV-1a over the canonical text form; identifies a grammar in manifests.
  uint64_t Hash() const;
  std::string ToString() const;
};

// BIO tag ids: 0 = O, 2k+1 = B-k, 2k+2 = I-k for type k in [0, K).
inline int32_t TagO() { return 0; }
inline int32_t TagB(int type) { return 2 * type + 1; }
inline int32_t TagI(int type) { return 2 * type + 2; }
int NumTags(int num_types);

struct TaggingExample {
  std::vector<int32_t> tokens;
  std::vector<int32_t> tags;

  bool operator==(const TaggingExample&) const = default;
};

struct MultilabelExample {
  std::vector<int32_t> tokens;
  // labels[k] == 1 iff the document contains a token of lexicon k.
  std::vector<uint8_t> labels;

  bool operator==(const MultilabelExample&) const = default;
};

// I-k only after B-k or I-k; every tag id in range.
bool IsValidBio(std::span<const int32_t> tags, int num_types);

// Draws one span length from the geometric sampler (support >= 1).
int SampleSpanLength(Rng& rng, double mean_span_len);

std::vector<std::vector<int32_t>> GenCorpus(uint64_t seed, int n_seqs,
                                            const GrammarConfig& grammar);
std::vector<TaggingExample> GenTagging(uint64_t seed, int n_seqs,
                                       const GrammarConfig& grammar);
std::vector<MultilabelExample> GenMultilabel(uint64_t seed, int n_docs,
                                             const GrammarConfig& grammar);

// Labels recomputed from lexicon membership of the tokens.
std::vector<uint8_t> LabelsFromTokens(std::span<const int32_t> tokens,
                                      const GrammarConfig& grammar);

Sample ToSample(const TaggingExample& ex);
Sample ToSample(const MultilabelExample& ex);
std::vector<Sample> ToSamples(std::span<const TaggingExample> data);
std::vector<Sample> ToSamples(std::span<const MultilabelExample> data);

// Selects ~`rate` of the positions (at least one) and sets their targets
// to the original ids, -1 elsewhere. A selected token becomes `mask_token`
// with probability 0.8, a uniform id below `mask_token` with 0.1, and stays
// unchanged otherwise.
Sample MaskForMlm(std::span<const int32_t> tokens, int32_t mask_token,
                  double rate, Rng& rng);

// Most frequent entity type by lexicon token count (ties to the lower
// type); num_types when the sequence has no entity tokens.
int DominantType(const Sample& sample, const GrammarConfig& grammar);

struct ClientDataset {
  uint32_t client_id = 0;
  std::vector<Sample> examples;
  // Example count per dominant type; the last bucket counts entity-free
  // examples.
  std::vector<size_t> type_histogram;
};

// Non-IID split. Client c draws a type mix p_c ~ Dirichlet(alpha * g), with
// g the global type frequencies, then fills an equal-size quota by picking a
// type from p_c (renormalized over types with examples left) and taking a
// random remaining example of that type. The clients partition the input.
std::vector<ClientDataset> PartitionClients(std::span<const Sample> data,
                                            const GrammarConfig& grammar,
                                            int num_clients, double alpha,
                                            uint64_t seed);

// Dirichlet draw via log-space Gamma variates; zero concentrations give zero
// mass.
std::vector<double> SampleDirichlet(std::span<const double> concentration,
                                    Rng& rng);

}  // namespace lsfl

#endif  // LSFL_DATASYNTH_H_
