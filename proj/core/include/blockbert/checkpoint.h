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

#ifndef BLOCKBERT_CORE_CHECKPOINT_H_
#define BLOCKBERT_CORE_CHECKPOINT_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "blockbert/encoder.h"
#include "blockbert/optimizer.h"

namespace blockbert {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout, all integers and floats little-endian:
//   "BBLK", u32 version,
//   config block (u32 layers, hidden, heads, seq_len, blocks, vocab,
//     ffn_hidden, tie_embeddings, dense_reference_attention, u32 count and
//     u32 per-shift head counts, f64 dropout, attention_dropout,
//     layer_norm_eps),
//   u64 seed,
//   u32 tensor count, then each parameter in ModelParams::List() order as
//     u32 rank, u32 dims, f64 values,
//   u32 has_optimizer; if set, u64 step followed by every first moment and
//     then every second moment in the same tensor encoding.
struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  std::uint64_t seed = 0;
  std::optional<AdamState> adam;
};

void WriteCheckpoint(std::ostream& os, const Checkpoint& checkpoint);
// FormatError on a bad magic, version or layout.
Checkpoint ReadCheckpoint(std::istream& is);

// File wrappers; IoError names the path.
void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace blockbert

#endif  // BLOCKBERT_CORE_CHECKPOINT_H_
