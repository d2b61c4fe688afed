/* Copyright 2026 The BlockBERT-cpp Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "blockbert/checkpoint.h"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "blockbert/errors.h"

namespace blockbert {
namespace {

constexpr std::array<char, 4> kMagic = {'B', 'B', 'L', 'K'};
constexpr std::uint32_t kMaxRank = 3;

template <typename U>
void PutLe(std::ostream& os, U value) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  os.write(bytes.data(), bytes.size());
}

template <typename U>
U GetLe(std::istream& is) {
  std::array<unsigned char, sizeof(U)> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw FormatError("checkpoint truncated");
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(bytes[i]) << (8 * i);
  }
  return value;
}

void PutU32(std::ostream& os, std::size_t v) {
  if (v > 0xFFFFFFFFull) throw ArgumentError("checkpoint field exceeds u32");
  PutLe<std::uint32_t>(os, static_cast<std::uint32_t>(v));
}
std::uint32_t GetU32(std::istream& is) { return GetLe<std::uint32_t>(is); }

void PutF64(std::ostream& os, double v) {
  PutLe<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
}
double GetF64(std::istream& is) {
  return std::bit_cast<double>(GetLe<std::uint64_t>(is));
}

void PutTensor(std::ostream& os, const Tensor& t) {
  PutU32(os, t.rank());
  for (std::size_t d : t.shape()) PutU32(os, d);
  for (double v : t.values()) PutF64(os, v);
}

Tensor GetTensor(std::istream& is, const Shape& expected,
                 const std::string& name) {
  const std::uint32_t rank = GetU32(is);
  if (rank == 0 || rank > kMaxRank) {
    throw FormatError("checkpoint tensor " + name + " has rank " +
                      std::to_string(rank));
  }
  Shape shape(rank);
  for (auto& d : shape) d = GetU32(is);
  if (shape != expected) {
    throw FormatError("checkpoint tensor " + name + " has shape " +
                      ShapeToString(shape) + ", expected " +
                      ShapeToString(expected));
  }
  Tensor t(shape);
  for (double& v : t.values()) v = GetF64(is);
  return t;
}

void WriteConfig(std::ostream& os, const ModelConfig& c) {
  PutU32(os, c.layers);
  PutU32(os, c.hidden);
  PutU32(os, c.heads);
  PutU32(os, c.seq_len);
  PutU32(os, c.blocks);
  PutU32(os, c.vocab);
  PutU32(os, c.ffn_hidden);
  PutU32(os, c.tie_embeddings ? 1 : 0);
  PutU32(os, c.dense_reference_attention ? 1 : 0);
  const auto& counts = c.assignment.counts();
  PutU32(os, counts.size());
  for (std::size_t k : counts) PutU32(os, k);
  PutF64(os, c.dropout);
  PutF64(os, c.attention_dropout);
  PutF64(os, c.layer_norm_eps);
}

ModelConfig ReadConfig(std::istream& is) {
  ModelConfig c;
  c.layers = GetU32(is);
  c.hidden = GetU32(is);
  c.heads = GetU32(is);
  c.seq_len = GetU32(is);
  c.blocks = GetU32(is);
  c.vocab = GetU32(is);
  c.ffn_hidden = GetU32(is);
  c.tie_embeddings = GetU32(is) != 0;
  c.dense_reference_attention = GetU32(is) != 0;
  const std::uint32_t num_counts = GetU32(is);
  if (num_counts == 0 || num_counts > (1u << 20)) {
    throw FormatError("checkpoint head assignment is malformed");
  }
  std::vector<std::size_t> counts(num_counts);
  for (auto& k : counts) k = GetU32(is);
  c.assignment = HeadAssignment(counts);
  c.dropout = GetF64(is);
  c.attention_dropout = GetF64(is);
  c.layer_norm_eps = GetF64(is);
  try {
    c.Validate();
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("checkpoint config invalid: ") + e.what());
  }
  return c;
}

}  // namespace

void WriteCheckpoint(std::ostream& os, const Checkpoint& ckpt) {
  os.write(kMagic.data(), kMagic.size());
  PutLe<std::uint32_t>(os, kCheckpointVersion);
  WriteConfig(os, ckpt.config);
  PutLe<std::uint64_t>(os, ckpt.seed);
  const auto params = ckpt.params.List();
  PutU32(os, params.size());
  for (const auto& p : params) PutTensor(os, *p.tensor);
  PutU32(os, ckpt.adam ? 1 : 0);
  if (ckpt.adam) {
    if (ckpt.adam->m.size() != params.size() ||
        ckpt.adam->v.size() != params.size()) {
      throw ArgumentError("optimizer state does not match the parameters");
    }
    PutLe<std::uint64_t>(os, ckpt.adam->step);
    for (const Tensor& t : ckpt.adam->m) PutTensor(os, t);
    for (const Tensor& t : ckpt.adam->v) PutTensor(os, t);
  }
}

Checkpoint ReadCheckpoint(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  const std::uint32_t version = GetU32(is);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config = ReadConfig(is);
  ckpt.seed = GetLe<std::uint64_t>(is);
  ckpt.params = ModelParams::Zeros(ckpt.config);
  auto params = ckpt.params.List();
  const std::uint32_t count = GetU32(is);
  if (count != params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) +
                      " tensors, config implies " +
                      std::to_string(params.size()));
  }
  for (auto& p : params) *p.tensor = GetTensor(is, p.tensor->shape(), p.name);
  if (GetU32(is) != 0) {
    AdamState adam;
    adam.step = GetLe<std::uint64_t>(is);
    for (const auto& p : params)
      adam.m.push_back(GetTensor(is, p.tensor->shape(), p.name + ".m"));
    for (const auto& p : params)
      adam.v.push_back(GetTensor(is, p.tensor->shape(), p.name + ".v"));
    ckpt.adam = std::move(adam);
  }
  return ckpt;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  WriteCheckpoint(os, checkpoint);
  os.flush();
  if (!os) throw IoError("failed writing " + path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return ReadCheckpoint(is);
}

}  // namespace blockbert
