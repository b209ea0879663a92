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

#include "network/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace npat::net {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  bool done() const { return pos_ == bytes_.size(); }

  std::uint64_t raw(int width, const char* what) {
    if (bytes_.size() - pos_ < static_cast<std::size_t>(width)) {
      throw ParseError("checkpoint truncated while reading " + std::string(what) + " at byte " +
                       std::to_string(pos_));
    }
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)]))
           << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(raw(4, what)); }
  double f64(const char* what) { return std::bit_cast<double>(raw(8, what)); }
  std::string str(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw ParseError("checkpoint truncated while reading " + std::string(what));
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ad::ParamSet& params) {
  std::string out = "NPAT";
  put_u32(out, kCheckpointVersion);
  for (const auto& [name, t] : params) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.dims()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) put_f64(out, v);
  }
  return out;
}

ad::ParamSet decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.str(4, "magic") != "NPAT") throw ParseError("not a checkpoint: bad magic");
  const std::uint32_t version = in.u32("version");
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  ad::ParamSet params;
  while (!in.done()) {
    const std::uint32_t len = in.u32("name length");
    if (len == 0 || len > 4096) throw ParseError("checkpoint name length " + std::to_string(len) + " is invalid");
    std::string name = in.str(len, "name");
    const std::uint32_t rank = in.u32("rank");
    if (rank == 0 || rank > 8) throw ParseError("tensor '" + name + "' has invalid rank " + std::to_string(rank));
    ad::Dims dims;
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      dims.push_back(in.u32("dims"));
      count *= dims.back();
    }
    if (count == 0 || count > (1u << 28)) throw ParseError("tensor '" + name + "' has invalid dims");
    std::vector<double> values(count);
    for (double& v : values) v = in.f64("values");
    if (params.contains(name)) throw ParseError("checkpoint repeats tensor '" + name + "'");
    params.add(name, ad::Tensor(std::move(dims), std::move(values)));
  }
  return params;
}

void save_checkpoint(const ad::ParamSet& params, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    out << encode_checkpoint(params);
    if (!out) throw IoError("write failed for checkpoint '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("cannot move checkpoint into '" + path + "'");
}

ad::ParamSet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_checkpoint(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace npat::net
