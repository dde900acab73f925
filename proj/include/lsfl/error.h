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

#ifndef LSFL_ERROR_H_
#define LSFL_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lsfl {

enum class ErrorCode {
  kConfig,
  kInput,
  kProtocol,
  kDecode,
  kInternal,
  kIo,
};

const char* ErrorCodeName(ErrorCode code);

// Base of every error raised by the library. The code decides the CLI exit
// status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorCode::kConfig, message) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& message)
      : Error(ErrorCode::kInput, message) {}
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& message)
      : Error(ErrorCode::kProtocol, message) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& message)
      : Error(ErrorCode::kInternal, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message)
      : Error(ErrorCode::kIo, message) {}
};

// Malformed wire frame. `offset` is the byte position where parsing failed.
class DecodeError : public Error {
 public:
  DecodeError(const std::string& message, size_t offset);
  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

}  // namespace lsfl

#endif  // LSFL_ERROR_H_
