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

#ifndef LSFL_TENSOR_H_
#define LSFL_TENSOR_H_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lsfl/error.h"

namespace lsfl {

enum class DType : uint8_t { kF32 = 1, kF64 = 2 };

template <typename T>
constexpr DType DTypeOf();
template <>
constexpr DType DTypeOf<float>() {
  return DType::kF32;
}
template <>
constexpr DType DTypeOf<double>() {
  return DType::kF64;
}

inline size_t ShapeSize(const std::vector<size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), size_t{1},
                         std::multiplies<>());
}

// Dense row-major tensor. The element type is the dtype.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<size_t> shape)
      : shape_(std::move(shape)), data_(ShapeSize(shape_), T{0}) {}
  Tensor(std::vector<size_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != ShapeSize(shape_)) {
      throw InternalError("tensor data length does not match its shape");
    }
  }

  const std::vector<size_t>& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t size() const { return data_.size(); }
  size_t dim(size_t i) const { return shape_[i]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  void Fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  // Exact byte-level equality (distinguishes -0.0 from 0.0, NaN payloads).
  bool BitwiseEquals(const Tensor& other) const {
    return shape_ == other.shape_ &&
           std::memcmp(data_.data(), other.data_.data(),
                       data_.size() * sizeof(T)) == 0;
  }

 private:
  std::vector<size_t> shape_;
  std::vector<T> data_;
};

// Named tensors of one layer group.
template <typename T>
using TensorGroup = std::map<std::string, Tensor<T>>;

// layer id -> named tensors. Layer 0 is the embeddings, 1..L the blocks and
// L+1 the task head.
template <typename T>
using LayeredTensors = std::map<int, TensorGroup<T>>;

template <typename T>
using ParamSet = LayeredTensors<T>;

// Same keyed structure as ParamSet, restricted to a subset of layer ids.
template <typename T>
using GradSet = LayeredTensors<T>;

template <typename T>
size_t NumElements(const TensorGroup<T>& group) {
  size_t n = 0;
  for (const auto& [name, t] : group) n += t.size();
  return n;
}

template <typename T>
size_t NumElements(const LayeredTensors<T>& set) {
  size_t n = 0;
  for (const auto& [id, group] : set) n += NumElements(group);
  return n;
}

template <typename T>
LayeredTensors<T> ZerosLike(const LayeredTensors<T>& set) {
  LayeredTensors<T> out;
  for (const auto& [id, group] : set) {
    for (const auto& [name, t] : group) out[id].emplace(name, Tensor<T>(t.shape()));
  }
  return out;
}

template <typename T>
bool BitwiseEquals(const TensorGroup<T>& a, const TensorGroup<T>& b) {
  if (a.size() != b.size()) return false;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !ia->second.BitwiseEquals(ib->second)) {
      return false;
    }
  }
  return true;
}

template <typename T>
bool BitwiseEquals(const LayeredTensors<T>& a, const LayeredTensors<T>& b) {
  if (a.size() != b.size()) return false;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !BitwiseEquals(ia->second, ib->second)) {
      return false;
    }
  }
  return true;
}

// Largest absolute elementwise difference; throws on structural mismatch.
template <typename T>
double MaxAbsDiff(const LayeredTensors<T>& a, const LayeredTensors<T>& b);

// Checks that `a` and `b` have identical layer ids, names and shapes.
template <typename T, typename U>
bool SameStructure(const LayeredTensors<T>& a, const LayeredTensors<U>& b) {
  if (a.size() != b.size()) return false;
  auto ib = b.begin();
  for (const auto& [id, group] : a) {
    if (ib->first != id || ib->second.size() != group.size()) return false;
    auto tb = ib->second.begin();
    for (const auto& [name, t] : group) {
      if (tb->first != name || tb->second.shape() != t.shape()) return false;
      ++tb;
    }
    ++ib;
  }
  return true;
}

// FNV-1a 64 over raw bytes of every tensor in the listed layer ids (all ids
// when `layer_ids` is empty), visiting names in order.
template <typename T>
uint64_t Checksum(const LayeredTensors<T>& set,
                  const std::vector<int>& layer_ids = {});

uint64_t Fnv1a64(std::span<const uint8_t> bytes,
                 uint64_t basis = 0xCBF29CE484222325ULL);
uint64_t Fnv1a64(const std::string& s);

template <typename To, typename From>
LayeredTensors<To> CastTensors(const LayeredTensors<From>& set) {
  LayeredTensors<To> out;
  for (const auto& [id, group] : set) {
    for (const auto& [name, t] : group) {
      std::vector<To> data(t.values().begin(), t.values().end());
      out[id].emplace(name, Tensor<To>(t.shape(), std::move(data)));
    }
  }
  return out;
}

}  // namespace lsfl

#endif  // LSFL_TENSOR_H_
