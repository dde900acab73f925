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

#ifndef LSFL_DATASET_IO_H_
#define LSFL_DATASET_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lsfl/model.h"

namespace lsfl {

// Dataset file: "FSKD", u16 version, u8 kind, u32 record count, then one
// length-prefixed record per example:
//   u32 byte length | u16 n | i32 tokens[n] | payload
// where payload is i32 targets[n] (tagging), u16 K + u8 labels[K]
// (multilabel), or empty (unlabeled corpus). All integers little-endian.
enum class DatasetKind : uint8_t { kTagging = 1, kMultilabel = 2, kCorpus = 3 };

inline constexpr uint16_t kDatasetVersion = 1;

std::vector<uint8_t> EncodeDataset(std::span<const Sample> samples,
                                   DatasetKind kind);
std::vector<Sample> DecodeDataset(std::span<const uint8_t> bytes,
                                  DatasetKind expected_kind);

void WriteDataset(const std::string& path, std::span<const Sample> samples,
                  DatasetKind kind);
std::vector<Sample> ReadDataset(const std::string& path,
                                DatasetKind expected_kind);

}  // namespace lsfl

#endif  // LSFL_DATASET_IO_H_
