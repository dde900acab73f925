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

#ifndef LSFL_METRICS_H_
#define LSFL_METRICS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace lsfl {

// Undefined values are empty optionals (e.g. F1 with no entities at all).
struct Metrics {
  std::optional<double> micro_f1;
  std::optional<double> macro_f1;
  std::optional<double> auc;
  // Classes left out of the macro averages because they have no positives
  // (or, for AUC, no negatives).
  std::vector<int> skipped_classes;
};

// Token-level scores over tag ids. Micro-F1 pools TP/FP/FN over every
// non-O class; macro-F1 averages per-class F1 over classes with at least one
// gold token. Gold tags of -1 are ignored. AUC is undefined.
Metrics EvaluateTagging(std::span<const std::vector<int32_t>> predicted,
                        std::span<const std::vector<int32_t>> gold,
                        int num_tags);

// `scores` are per-label probabilities; a label is predicted at >= 0.5.
// AUC is the macro average of one-vs-rest ROC AUC (Mann-Whitney rank
// statistic, ties credited 1/2).
Metrics EvaluateMultilabel(std::span<const std::vector<double>> scores,
                           std::span<const std::vector<uint8_t>> gold,
                           int num_labels);

// ROC AUC of one binary problem; nullopt without both classes present.
std::optional<double> RankAuc(std::span<const double> scores,
                              std::span<const uint8_t> labels);

double F1FromCounts(uint64_t tp, uint64_t fp, uint64_t fn);

}  // namespace lsfl

#endif  // LSFL_METRICS_H_
