// Copyright (c) the freqres project authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "freqres/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace freqres {

namespace {

constexpr char kMagic[4] = {'F', 'R', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void WriteU32(std::ostream& out, uint32_t v) {
  const unsigned char bytes[4] = {
      static_cast<unsigned char>(v & 0xff),
      static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff),
      static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

void WriteI64(std::ostream& out, int64_t v) {
  const uint64_t u = static_cast<uint64_t>(v);
  WriteU32(out, static_cast<uint32_t>(u & 0xffffffffull));
  WriteU32(out, static_cast<uint32_t>(u >> 32));
}

void WriteString(std::ostream& out, const std::string& s) {
  WriteU32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void WriteF32(std::ostream& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  WriteU32(out, bits);
}

uint32_t ReadU32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw DataError("checkpoint: truncated file");
  return static_cast<uint32_t>(bytes[0]) |
         (static_cast<uint32_t>(bytes[1]) << 8) |
         (static_cast<uint32_t>(bytes[2]) << 16) |
         (static_cast<uint32_t>(bytes[3]) << 24);
}

int64_t ReadI64(std::istream& in) {
  const uint64_t lo = ReadU32(in);
  const uint64_t hi = ReadU32(in);
  return static_cast<int64_t>(lo | (hi << 32));
}

std::string ReadString(std::istream& in) {
  const uint32_t len = ReadU32(in);
  if (len > (1u << 20)) throw DataError("checkpoint: implausible string length");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw DataError("checkpoint: truncated file");
  return s;
}

float ReadF32(std::istream& in) {
  const uint32_t bits = ReadU32(in);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

int64_t Checkpoint::Hyper(const std::string& key) const {
  for (const auto& [k, v] : hyper) {
    if (k == key) return v;
  }
  throw DataError("checkpoint: missing hyperparameter " + key);
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": unwritable path");
  out.write(kMagic, 4);
  WriteU32(out, kVersion);
  WriteU32(out, static_cast<uint32_t>(ckpt.kind));
  WriteU32(out, ckpt.mode);
  WriteU32(out, static_cast<uint32_t>(ckpt.hyper.size()));
  for (const auto& [key, value] : ckpt.hyper) {
    WriteString(out, key);
    WriteI64(out, value);
  }
  WriteU32(out, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const TensorBlob& blob : ckpt.tensors) {
    WriteString(out, blob.name);
    for (int d : blob.shape) WriteU32(out, static_cast<uint32_t>(d));
  }
  for (const TensorBlob& blob : ckpt.tensors) {
    for (float v : blob.values) WriteF32(out, v);
  }
  WriteString(out, BinSpecToString(ckpt.bins));
  if (!out) throw DataError(path + ": write failed");
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": unreadable file");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError(path + ": not a checkpoint file");
  }
  const uint32_t version = ReadU32(in);
  if (version != kVersion) {
    throw DataError(path + ": unsupported checkpoint version " +
                    std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.kind = static_cast<CkptKind>(ReadU32(in));
  if (ckpt.kind != CkptKind::kClassifier && ckpt.kind != CkptKind::kCed) {
    throw DataError(path + ": unknown checkpoint kind");
  }
  ckpt.mode = ReadU32(in);
  const uint32_t n_hyper = ReadU32(in);
  for (uint32_t i = 0; i < n_hyper; ++i) {
    std::string key = ReadString(in);
    const int64_t value = ReadI64(in);
    ckpt.hyper.emplace_back(std::move(key), value);
  }
  const uint32_t n_tensors = ReadU32(in);
  ckpt.tensors.resize(n_tensors);
  for (uint32_t i = 0; i < n_tensors; ++i) {
    ckpt.tensors[i].name = ReadString(in);
    for (int& d : ckpt.tensors[i].shape) {
      d = static_cast<int>(ReadU32(in));
    }
  }
  for (TensorBlob& blob : ckpt.tensors) {
    const int64_t n = static_cast<int64_t>(blob.shape[0]) * blob.shape[1] *
                      blob.shape[2] * blob.shape[3];
    blob.values.resize(n);
    for (float& v : blob.values) v = ReadF32(in);
  }
  ckpt.bins = BinSpecFromString(ReadString(in));
  return ckpt;
}

}  // namespace freqres
