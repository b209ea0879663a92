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

#include <string>

#include "autodiff/tensor.hpp"

namespace npat::net {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// "NPAT", u32 version, then per tensor: u32 name length, name bytes, u32 rank,
// u32 dims[rank], f64 values. All integers and floats little-endian.
std::string encode_checkpoint(const ad::ParamSet& params);
ad::ParamSet decode_checkpoint(const std::string& bytes);

void save_checkpoint(const ad::ParamSet& params, const std::string& path);
ad::ParamSet load_checkpoint(const std::string& path);

}  // namespace npat::net
