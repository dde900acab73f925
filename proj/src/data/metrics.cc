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

#include "lsfl/metrics.h"

#include <algorithm>
#include <numeric>
#include <string>

#include "lsfl/error.h"

namespace lsfl {

double F1FromCounts(uint64_t tp, uint64_t fp, uint64_t fn) {
  const uint64_t denom = 2 * tp + fp + fn;
  if (denom == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

Metrics EvaluateTagging(std::span<const std::vector<int32_t>> predicted,
                        std::span<const std::vector<int32_t>> gold,
                        int num_tags) {
  if (predicted.size() != gold.size()) {
    throw InputError("evaluate: " + std::to_string(predicted.size()) +
                     " predictions for " + std::to_string(gold.size()) +
                     " gold sequences");
  }
  std::vector<uint64_t> tp(num_tags, 0), fp(num_tags, 0), fn(num_tags, 0);
  for (size_t s = 0; s < gold.size(); ++s) {
    if (predicted[s].size() != gold[s].size()) {
      throw InputError("evaluate: sequence " + std::to_string(s) +
                       " length mismatch");
    }
    for (size_t i = 0; i < gold[s].size(); ++i) {
      const int32_t g = gold[s][i];
      const int32_t p = predicted[s][i];
      if (g < 0) continue;
      if (g >= num_tags || p < 0 || p >= num_tags) {
        throw InputError("evaluate: tag id out of range");
      }
      if (p == g) {
        if (g != 0) ++tp[g];
      } else {
        if (p != 0) ++fp[p];
        if (g != 0) ++fn[g];
      }
    }
  }
  Metrics m;
  uint64_t sum_tp = 0, sum_fp = 0, sum_fn = 0;
  double macro = 0.0;
  int macro_count = 0;
  for (int c = 1; c < num_tags; ++c) {
    sum_tp += tp[c];
    sum_fp += fp[c];
    sum_fn += fn[c];
    if (tp[c] + fn[c] == 0) {
      m.skipped_classes.push_back(c);
      continue;
    }
    macro += F1FromCounts(tp[c], fp[c], fn[c]);
    ++macro_count;
  }
  if (sum_tp + sum_fp + sum_fn > 0) {
    m.micro_f1 = F1FromCounts(sum_tp, sum_fp, sum_fn);
  }
  if (macro_count > 0) m.macro_f1 = macro / macro_count;
  return m;
}

std::optional<double> RankAuc(std::span<const double> scores,
                              std::span<const uint8_t> labels) {
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  // Sum of (1-based, tie-averaged) ranks of the positives, doubled so it
  // stays integral.
  uint64_t twice_rank_sum = 0;
  uint64_t positives = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const uint64_t twice_avg_rank = (i + 1) + (j + 1);
    for (size_t k = i; k <= j; ++k) {
      if (labels[order[k]]) {
        twice_rank_sum += twice_avg_rank;
        ++positives;
      }
    }
    i = j + 1;
  }
  const uint64_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  const double u = (static_cast<double>(twice_rank_sum) -
                    static_cast<double>(positives * (positives + 1))) /
                   2.0;
  return u / (static_cast<double>(positives) * static_cast<double>(negatives));
}

Metrics EvaluateMultilabel(std::span<const std::vector<double>> scores,
                           std::span<const std::vector<uint8_t>> gold,
                           int num_labels) {
  if (scores.size() != gold.size()) {
    throw InputError("evaluate: " + std::to_string(scores.size()) +
                     " score rows for " + std::to_string(gold.size()) +
                     " gold rows");
  }
  for (size_t s = 0; s < gold.size(); ++s) {
    if (static_cast<int>(scores[s].size()) != num_labels ||
        static_cast<int>(gold[s].size()) != num_labels) {
      throw InputError("evaluate: row " + std::to_string(s) +
                       " has the wrong number of labels");
    }
  }
  Metrics m;
  uint64_t sum_tp = 0, sum_fp = 0, sum_fn = 0;
  double macro = 0.0;
  int macro_count = 0;
  double auc_sum = 0.0;
  int auc_count = 0;
  std::vector<double> column(gold.size());
  std::vector<uint8_t> truth(gold.size());
  for (int k = 0; k < num_labels; ++k) {
    uint64_t tp = 0, fp = 0, fn = 0;
    for (size_t s = 0; s < gold.size(); ++s) {
      const bool p = scores[s][k] >= 0.5;
      const bool g = gold[s][k] != 0;
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
      column[s] = scores[s][k];
      truth[s] = g ? 1 : 0;
    }
    sum_tp += tp;
    sum_fp += fp;
    sum_fn += fn;
    const bool has_positive = tp + fn > 0;
    if (has_positive) {
      macro += F1FromCounts(tp, fp, fn);
      ++macro_count;
    }
    const auto auc = RankAuc(column, truth);
    if (auc) {
      auc_sum += *auc;
      ++auc_count;
    }
    if (!has_positive || !auc) m.skipped_classes.push_back(k);
  }
  if (sum_tp + sum_fp + sum_fn > 0) {
    m.micro_f1 = F1FromCounts(sum_tp, sum_fp, sum_fn);
  }
  if (macro_count > 0) m.macro_f1 = macro / macro_count;
  if (auc_count > 0) m.auc = auc_sum / auc_count;
  return m;
}

}  // namespace lsfl
