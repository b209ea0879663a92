/*
 * Copyright (c) 2026, The npat Authors. All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace npat {

// Mirrors npat_status in include/npat/npat.h; keep the values in sync.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kDimension = 2,
  kNumeric = 3,
  kParse = 4,
  kIo = 5,
  kConfig = 6,
  kAlignmentCollapse = 7,
  kInternal = 99,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define NPAT_DEFINE_ERROR(Name, Code)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(Code, what) {}      \
  };

NPAT_DEFINE_ERROR(InvalidArgument, ErrorCode::kInvalidArgument)
NPAT_DEFINE_ERROR(DimensionError, ErrorCode::kDimension)
NPAT_DEFINE_ERROR(NumericError, ErrorCode::kNumeric)
NPAT_DEFINE_ERROR(ParseError, ErrorCode::kParse)
NPAT_DEFINE_ERROR(IoError, ErrorCode::kIo)
NPAT_DEFINE_ERROR(ConfigError, ErrorCode::kConfig)
NPAT_DEFINE_ERROR(AlignmentCollapse, ErrorCode::kAlignmentCollapse)

#undef NPAT_DEFINE_ERROR

}  // namespace npat
