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

#ifndef LSFL_MODEL_H_
#define LSFL_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lsfl/layer_partition.h"
#include "lsfl/tensor.h"

namespace lsfl {

enum class TaskKind { kTagging, kMultilabel, kMlm };

const char* TaskKindName(TaskKind task);
TaskKind ParseTaskKind(const std::string& name);

// Shape of the small pre-norm transformer.
//
// Layer ids: 0 holds token and learned positional embeddings, 1..n_blocks
// are transformer blocks (RMSNorm, multi-head attention, RMSNorm, SwiGLU, no
// biases) and n_blocks + 1 is the task head (final RMSNorm + projection).
struct ModelConfig {
  int vocab_size = 0;
  int d_model = 0;
  int n_heads = 1;
  int n_blocks = 1;
  int d_ff = 0;
  int max_seq_len = 0;
  TaskKind task = TaskKind::kTagging;
  // K: entity types (tagging) or labels (multilabel). Unused for MLM.
  int num_types = 1;

  int head_layer() const { return n_blocks + 1; }
  int head_dim() const { return d_model / n_heads; }

  // 2K+1 BIO tags, K labels, or V vocabulary logits.
  int OutputDim() const;

  // Throws ConfigError when the shape is inconsistent.
  void Validate() const;

  bool operator==(const ModelConfig&) const = default;
};

// One training/eval sequence.
//
// `targets` is per token (tag id for tagging, original token for MLM, -1 to
// ignore the position). `labels` is a 0/1 vector of length K for multilabel.
struct Sample {
  std::vector<int32_t> tokens;
  std::vector<int32_t> targets;
  std::vector<uint8_t> labels;

  bool operator==(const Sample&) const = default;
};

using TokenBatch = std::vector<Sample>;

// Tensor name -> shape for every group, fixed by the config.
std::vector<std::pair<std::string, std::vector<size_t>>> GroupLayout(
    const ModelConfig& cfg, int layer_id);

// Parameter count per layer id; a pure function of the config.
std::vector<size_t> GroupParamCounts(const ModelConfig& cfg);

size_t TotalParamCount(const ModelConfig& cfg);

// Decoupled weight decay applies to projection matrices only; norm gains and
// embeddings are exempt.
bool IsDecayed(int layer_id, const std::string& name);

template <typename T>
ParamSet<T> InitParams(const ModelConfig& cfg, uint64_t seed);

// Fresh head group (layer L+1) for `cfg`, drawn from the same per-group
// stream InitParams uses.
template <typename T>
TensorGroup<T> InitHead(const ModelConfig& cfg, uint64_t seed);

// Logits for a batch of equal-length sequences: [B, n, 2K+1] (tagging),
// [B, K] (multilabel, mean pooled) or [B, n, V] (mlm).
template <typename T>
Tensor<T> Forward(const ModelConfig& cfg, const ParamSet<T>& params,
                  std::span<const Sample> batch);

// Logits of one sequence: [n, out] or [K] for multilabel.
template <typename T>
Tensor<T> ForwardSample(const ModelConfig& cfg, const ParamSet<T>& params,
                        const Sample& sample);

// Mean over the batch of per-sample losses. A sample's loss is the mean
// token cross-entropy over its non-ignored positions (tagging, mlm) or the
// mean binary cross-entropy over its K labels (multilabel).
template <typename T>
double Loss(const ModelConfig& cfg, const ParamSet<T>& params,
            std::span<const Sample> batch);

template <typename T>
struct LossAndGradsResult {
  double loss = 0.0;
  // Batch gradient (sum of per-sample gradients divided by B). Empty when
  // per-example gradients were requested.
  GradSet<T> grads;
  std::vector<GradSet<T>> per_example;
};

// Gradients of the trainable layer ids only. Backpropagation stops below the
// lowest trainable layer, so frozen blocks under it cost one forward pass.
template <typename T>
LossAndGradsResult<T> LossAndGrads(const ModelConfig& cfg,
                                   const ParamSet<T>& params,
                                   const LayerPartition& partition,
                                   std::span<const Sample> batch,
                                   bool per_example);

// Validates token ids and lengths of `batch` against `cfg`. Targets are
// checked where a loss is computed.
void CheckBatch(const ModelConfig& cfg, std::span<const Sample> batch);

}  // namespace lsfl

#endif  // LSFL_MODEL_H_
