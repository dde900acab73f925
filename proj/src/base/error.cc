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

#include "lsfl/error.h"

namespace lsfl {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
      return "config error";
    case ErrorCode::kInput:
      return "input error";
    case ErrorCode::kProtocol:
      return "protocol error";
    case ErrorCode::kDecode:
      return "decode error";
    case ErrorCode::kInternal:
      return "internal error";
    case ErrorCode::kIo:
      return "io error";
  }
  return "error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

DecodeError::DecodeError(const std::string& message, size_t offset)
    : Error(ErrorCode::kDecode,
            message + " (at byte offset " + std::to_string(offset) + ")"),
      offset_(offset) {}

}  // namespace lsfl
