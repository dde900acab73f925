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

#include "lsfl/dataset_io.h"

#include "lsfl/byte_io.h"

namespace lsfl {
namespace {

constexpr char kMagic[4] = {'F', 'S', 'K', 'D'};

}  // namespace

std::vector<uint8_t> EncodeDataset(std::span<const Sample> samples,
                                   DatasetKind kind) {
  ByteWriter w;
  w.PutBytes(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(kMagic), 4));
  w.Put<uint16_t>(kDatasetVersion);
  w.Put<uint8_t>(static_cast<uint8_t>(kind));
  w.Put<uint32_t>(static_cast<uint32_t>(samples.size()));
  for (const Sample& s : samples) {
    ByteWriter rec;
    rec.Put<uint16_t>(static_cast<uint16_t>(s.tokens.size()));
    rec.PutArray<int32_t>(s.tokens);
    if (kind == DatasetKind::kTagging) {
      rec.PutArray<int32_t>(s.targets);
    } else if (kind == DatasetKind::kMultilabel) {
      rec.Put<uint16_t>(static_cast<uint16_t>(s.labels.size()));
      rec.PutArray<uint8_t>(s.labels);
    }
    w.Put<uint32_t>(static_cast<uint32_t>(rec.size()));
    w.PutBytes(rec.bytes());
  }
  return w.Release();
}

std::vector<Sample> DecodeDataset(std::span<const uint8_t> bytes,
                                  DatasetKind expected_kind) {
  ByteReader r(bytes);
  char magic[4];
  r.GetArray<char>(magic, "magic");
  if (std::string(magic, 4) != std::string(kMagic, 4)) {
    throw DecodeError("bad dataset magic", 0);
  }
  const auto version = r.Get<uint16_t>("version");
  if (version != kDatasetVersion) {
    throw DecodeError("unsupported dataset version " + std::to_string(version),
                      4);
  }
  const auto kind = static_cast<DatasetKind>(r.Get<uint8_t>("kind"));
  if (kind != expected_kind) throw DecodeError("unexpected dataset kind", 6);
  const auto count = r.Get<uint32_t>("record count");
  std::vector<Sample> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const auto len = r.Get<uint32_t>("record length");
    const size_t start = r.offset();
    Sample s;
    const auto n = r.Get<uint16_t>("token count");
    s.tokens.resize(n);
    r.GetArray<int32_t>(s.tokens, "tokens");
    if (kind == DatasetKind::kTagging) {
      s.targets.resize(n);
      r.GetArray<int32_t>(s.targets, "targets");
    } else if (kind == DatasetKind::kMultilabel) {
      const auto k = r.Get<uint16_t>("label count");
      s.labels.resize(k);
      r.GetArray<uint8_t>(s.labels, "labels");
    }
    if (r.offset() - start != len) {
      throw DecodeError("record length prefix does not match its contents",
                        start);
    }
    out.push_back(std::move(s));
  }
  if (!r.done()) throw DecodeError("trailing bytes after last record", r.offset());
  return out;
}

void WriteDataset(const std::string& path, std::span<const Sample> samples,
                  DatasetKind kind) {
  WriteFileBytes(path, EncodeDataset(samples, kind));
}

std::vector<Sample> ReadDataset(const std::string& path,
                                DatasetKind expected_kind) {
  return DecodeDataset(ReadFileBytes(path), expected_kind);
}

}  // namespace lsfl
