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

#ifndef LSFL_WIRE_H_
#define LSFL_WIRE_H_

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lsfl/client.h"
#include "lsfl/layer_partition.h"
#include "lsfl/model.h"
#include "lsfl/secure_agg.h"

namespace lsfl {

// UpdateFrame, version 1. All integers little-endian.
//
//   header (24 bytes): "FSKP" | u16 version | u32 round | u32 client_id |
//                      u64 weight | u16 layer_count
//   per layer:         u16 layer_id | u16 tensor_count
//   per tensor:        u64 fnv1a64(name) | u8 dtype | u8 rank |
//                      u32 dims[rank] | payload[product(dims)]
//   fixed-point only:  f64 quantization scale (8-byte trailer)
//
// Layers are ascending by id and tensors ascending by name hash; decoding
// rejects anything else, so every update has exactly one encoding.
inline constexpr uint16_t kWireVersion = 1;
inline constexpr size_t kFrameHeaderBytes = 24;
inline constexpr size_t kLayerHeaderBytes = 4;
inline constexpr size_t kTensorHeaderBytes = 10;
inline constexpr size_t kScaleTrailerBytes = 8;

enum class WireDType : uint8_t { kF32 = 1, kF64 = 2, kFixedU64 = 3 };

size_t WireDTypeSize(WireDType dtype);

using DecodedUpdate =
    std::variant<ClientUpdate<float>, ClientUpdate<double>, MaskedUpdate>;

std::vector<uint8_t> EncodeUpdate(const ClientUpdate<float>& u);
std::vector<uint8_t> EncodeUpdate(const ClientUpdate<double>& u);
std::vector<uint8_t> EncodeUpdate(const MaskedUpdate& u);

// Tensor names the decoder can map back from their hashes: every name in
// the model layout.
const std::vector<std::string>& KnownTensorNames();

// Throws DecodeError (with byte offset) on bad magic, unsupported version,
// truncation, unknown dtype or name hash, non-canonical ordering, mixed
// dtypes or trailing bytes. Nothing is returned on failure.
DecodedUpdate DecodeUpdate(std::span<const uint8_t> bytes);
DecodedUpdate DecodeUpdate(std::span<const uint8_t> bytes,
                           std::span<const std::string> names);

// Encoded length of an update carrying `layers` of `cfg`, without encoding.
size_t FrameSize(const ModelConfig& cfg, const std::set<int>& layers,
                 WireDType dtype);

// Payload-byte ratio of a trainable update to a full-model update; with a
// single dtype this is the parameter-count ratio. include_head = false drops
// the head group from both sides.
double CommFraction(const LayerPartition& partition, const ModelConfig& cfg,
                    bool include_head);

// Same ratio from explicit per-group parameter counts.
double CommFraction(std::span<const size_t> group_sizes,
                    const std::set<int>& trainable);

}  // namespace lsfl

#endif  // LSFL_WIRE_H_
