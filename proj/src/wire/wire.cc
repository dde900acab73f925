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

#include "lsfl/wire.h"

#include <algorithm>
#include <bit>
#include <map>
#include <unordered_map>

#include "lsfl/byte_io.h"

namespace lsfl {
namespace {

constexpr char kMagic[4] = {'F', 'S', 'K', 'P'};

template <typename T>
constexpr WireDType WireDTypeOf() {
  if constexpr (std::is_same_v<T, float>) {
    return WireDType::kF32;
  } else if constexpr (std::is_same_v<T, double>) {
    return WireDType::kF64;
  } else {
    return WireDType::kFixedU64;
  }
}

template <typename T>
std::vector<uint8_t> Encode(uint32_t round, uint32_t client_id, uint64_t weight,
                            const LayeredTensors<T>& params,
                            const double* scale) {
  ByteWriter w;
  w.PutBytes(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(kMagic), 4));
  w.Put<uint16_t>(kWireVersion);
  w.Put<uint32_t>(round);
  w.Put<uint32_t>(client_id);
  w.Put<uint64_t>(weight);
  w.Put<uint16_t>(static_cast<uint16_t>(params.size()));
  for (const auto& [id, group] : params) {
    w.Put<uint16_t>(static_cast<uint16_t>(id));
    w.Put<uint16_t>(static_cast<uint16_t>(group.size()));
    std::vector<std::pair<uint64_t, const Tensor<T>*>> sorted;
    for (const auto& [name, t] : group) sorted.emplace_back(Fnv1a64(name), &t);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [hash, t] : sorted) {
      w.Put<uint64_t>(hash);
      w.Put<uint8_t>(static_cast<uint8_t>(WireDTypeOf<T>()));
      w.Put<uint8_t>(static_cast<uint8_t>(t->rank()));
      for (size_t d : t->shape()) w.Put<uint32_t>(static_cast<uint32_t>(d));
      w.PutArray<T>(t->values());
    }
  }
  if (scale != nullptr) w.Put<double>(*scale);
  return w.Release();
}

template <typename T>
void ReadPayload(ByteReader& r, LayeredTensors<T>& out, int layer_id,
                 const std::string& name, std::vector<size_t> shape) {
  Tensor<T> t(std::move(shape));
  r.GetArray<T>(t.values(), "tensor payload");
  out[layer_id].emplace(name, std::move(t));
}

}  // namespace

size_t WireDTypeSize(WireDType dtype) {
  switch (dtype) {
    case WireDType::kF32:
      return 4;
    case WireDType::kF64:
    case WireDType::kFixedU64:
      return 8;
  }
  return 0;
}

std::vector<uint8_t> EncodeUpdate(const ClientUpdate<float>& u) {
  return Encode(u.round, u.client_id, u.weight, u.params, nullptr);
}

std::vector<uint8_t> EncodeUpdate(const ClientUpdate<double>& u) {
  return Encode(u.round, u.client_id, u.weight, u.params, nullptr);
}

std::vector<uint8_t> EncodeUpdate(const MaskedUpdate& u) {
  return Encode(u.round, u.client_id, u.weight, u.params, &u.scale);
}

const std::vector<std::string>& KnownTensorNames() {
  static const std::vector<std::string> names = {
      "tok_emb", "pos_emb", "attn_norm", "wq",     "wk",         "wv",   "wo",
      "ffn_norm", "w_gate", "w_up",      "w_down", "final_norm", "w_out"};
  return names;
}

DecodedUpdate DecodeUpdate(std::span<const uint8_t> bytes) {
  return DecodeUpdate(bytes, KnownTensorNames());
}

DecodedUpdate DecodeUpdate(std::span<const uint8_t> bytes,
                           std::span<const std::string> names) {
  std::unordered_map<uint64_t, const std::string*> by_hash;
  for (const std::string& n : names) by_hash.emplace(Fnv1a64(n), &n);

  ByteReader r(bytes);
  char magic[4];
  r.GetArray<char>(magic, "magic");
  if (!std::equal(magic, magic + 4, kMagic)) throw DecodeError("bad magic", 0);
  const auto version = r.Get<uint16_t>("version");
  if (version != kWireVersion) {
    throw DecodeError("unsupported frame version " + std::to_string(version), 4);
  }
  const auto round = r.Get<uint32_t>("round");
  const auto client_id = r.Get<uint32_t>("client_id");
  const auto weight = r.Get<uint64_t>("weight");
  const auto layer_count = r.Get<uint16_t>("layer_count");

  LayeredTensors<float> f32;
  LayeredTensors<double> f64;
  LayeredTensors<uint64_t> fixed;
  std::optional<WireDType> frame_dtype;
  int prev_layer = -1;
  for (uint16_t l = 0; l < layer_count; ++l) {
    const size_t layer_offset = r.offset();
    const int layer_id = r.Get<uint16_t>("layer_id");
    if (layer_id <= prev_layer) {
      throw DecodeError("layers not in ascending order", layer_offset);
    }
    prev_layer = layer_id;
    const auto tensor_count = r.Get<uint16_t>("tensor_count");
    uint64_t prev_hash = 0;
    for (uint16_t t = 0; t < tensor_count; ++t) {
      const size_t tensor_offset = r.offset();
      const auto hash = r.Get<uint64_t>("name hash");
      if (t > 0 && hash <= prev_hash) {
        throw DecodeError("tensors not in ascending name-hash order",
                          tensor_offset);
      }
      prev_hash = hash;
      auto name_it = by_hash.find(hash);
      if (name_it == by_hash.end()) {
        throw DecodeError("unknown tensor name hash", tensor_offset);
      }
      const size_t dtype_offset = r.offset();
      const auto raw_dtype = r.Get<uint8_t>("dtype");
      if (raw_dtype < 1 || raw_dtype > 3) {
        throw DecodeError("unknown dtype " + std::to_string(raw_dtype),
                          dtype_offset);
      }
      const auto dtype = static_cast<WireDType>(raw_dtype);
      if (frame_dtype && *frame_dtype != dtype) {
        throw DecodeError("mixed dtypes in one frame", dtype_offset);
      }
      frame_dtype = dtype;
      const auto rank = r.Get<uint8_t>("rank");
      std::vector<size_t> shape(rank);
      for (auto& d : shape) d = r.Get<uint32_t>("dim");
      const size_t payload = ShapeSize(shape) * WireDTypeSize(dtype);
      if (payload > r.remaining()) {
        throw DecodeError("truncated input reading tensor payload", r.offset());
      }
      switch (dtype) {
        case WireDType::kF32:
          ReadPayload(r, f32, layer_id, *name_it->second, std::move(shape));
          break;
        case WireDType::kF64:
          ReadPayload(r, f64, layer_id, *name_it->second, std::move(shape));
          break;
        case WireDType::kFixedU64:
          ReadPayload(r, fixed, layer_id, *name_it->second, std::move(shape));
          break;
      }
    }
    if (tensor_count == 0) {
      // Keep empty layers visible in the decoded keyset.
      f32[layer_id];
      f64[layer_id];
      fixed[layer_id];
    }
  }

  if (frame_dtype == WireDType::kFixedU64) {
    MaskedUpdate m;
    m.round = round;
    m.client_id = client_id;
    m.weight = weight;
    m.scale = r.Get<double>("quantization scale");
    m.params = std::move(fixed);
    if (!r.done()) throw DecodeError("trailing bytes after frame", r.offset());
    return m;
  }
  if (!r.done()) throw DecodeError("trailing bytes after frame", r.offset());
  if (frame_dtype == WireDType::kF64) {
    ClientUpdate<double> u{round, client_id, weight, std::move(f64)};
    return u;
  }
  ClientUpdate<float> u{round, client_id, weight, std::move(f32)};
  return u;
}

size_t FrameSize(const ModelConfig& cfg, const std::set<int>& layers,
                 WireDType dtype) {
  size_t bytes = kFrameHeaderBytes;
  for (int id : layers) {
    bytes += kLayerHeaderBytes;
    for (const auto& [name, shape] : GroupLayout(cfg, id)) {
      bytes += kTensorHeaderBytes + 4 * shape.size() +
               ShapeSize(shape) * WireDTypeSize(dtype);
    }
  }
  if (dtype == WireDType::kFixedU64) bytes += kScaleTrailerBytes;
  return bytes;
}

double CommFraction(std::span<const size_t> group_sizes,
                    const std::set<int>& trainable) {
  size_t total = 0;
  size_t part = 0;
  for (size_t id = 0; id < group_sizes.size(); ++id) {
    total += group_sizes[id];
    if (trainable.count(static_cast<int>(id))) part += group_sizes[id];
  }
  if (total == 0) return 0.0;
  return static_cast<double>(part) / static_cast<double>(total);
}

double CommFraction(const LayerPartition& partition, const ModelConfig& cfg,
                    bool include_head) {
  std::vector<size_t> sizes = GroupParamCounts(cfg);
  if (!include_head) sizes[cfg.head_layer()] = 0;
  return CommFraction(sizes, partition.trainable);
}

}  // namespace lsfl
