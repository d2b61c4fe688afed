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

#ifndef BLOCKBERT_TOOLS_COMMANDS_H_
#define BLOCKBERT_TOOLS_COMMANDS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace blockbert::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct MaskOptions {
  std::size_t seq_len = 0;
  std::size_t blocks = 0;  // 0 takes the permutation's length
  std::string perm;        // one-based, e.g. "2,3,1"; empty is identity
  bool sparse_fixed = false;
  std::size_t stride = 128;
  std::size_t expressivity = 32;
  std::string out;
  std::string format = "csv";
};
int RunMask(const MaskOptions& options, std::ostream& out);

struct EquivOptions {
  std::size_t seq_len = 64;
  std::size_t blocks = 2;
  std::size_t head_dim = 16;
  std::size_t trials = 50;
  double tolerance = 1e-10;
  std::uint64_t seed = 1;
  bool corrupt = false;  // self-check: perturbs the blockwise output
};
int RunEquiv(const EquivOptions& options, std::ostream& out);

struct BenchOptions {
  std::vector<std::size_t> seq_lens = {512, 1024, 2048};
  std::vector<std::size_t> blocks = {1, 2, 3};
  std::size_t batch = 1;
  std::size_t heads = 1;
  std::size_t head_dim = 64;
  std::size_t repeat = 5;
  bool backward = false;
  std::size_t budget = 0;  // live-byte budget; 0 is unlimited
  std::string csv;         // empty writes to the output stream
  std::uint64_t seed = 1;
};
int RunBench(const BenchOptions& options, std::ostream& out);

struct RegressOptions {
  std::size_t tokens_per_batch = 4096;
  std::vector<std::size_t> seq_lens = {128, 256, 512, 1024};
  std::vector<std::size_t> blocks = {1};
  std::vector<std::size_t> table_blocks = {1, 2, 3};
  std::size_t layers = 1;
  std::size_t hidden = 64;
  std::size_t heads = 4;
  std::size_t vocab = 64;
  double dropout = 0.1;
  std::vector<double> synthetic;  // a2,a1,a0 replaces measurement
  std::string csv;
  std::uint64_t seed = 1;
};
int RunRegress(const RegressOptions& options, std::ostream& out);

// Shared by train, eval and ablate. Without a corpus file the synthetic
// copy task is used.
struct ModelOptions {
  std::size_t layers = 2;
  std::size_t hidden = 32;
  std::size_t seq_len = 64;
  std::size_t vocab = 64;
  std::string assignment = "2:0:0:0:2:0:0:0";
  double dropout = 0.0;
  double attention_dropout = 0.0;
  bool tie_embeddings = false;
};

struct DataOptions {
  std::string corpus;
  std::size_t copy_sequences = 4096;
  std::size_t heldout_sequences = 256;
  double heldout_fraction = 0.1;
  double mask_rate = 0.15;
};

struct OptimOptions {
  std::size_t batch = 32;
  std::size_t steps = 200;
  double lr = 1e-2;
  long long warmup = -1;  // negative selects the proportional default
  double weight_decay = 0.01;
  double clip = 1.0;
};

struct TrainOptions {
  ModelOptions model;
  DataOptions data;
  OptimOptions optim;
  std::string checkpoint_dir;
  std::size_t checkpoint_interval = 0;  // 0 saves only the final state
  std::string resume;
  std::string log;  // CSV path; empty writes to the output stream
  std::uint64_t seed = 1;
};
int RunTrain(const TrainOptions& options, std::ostream& out);

struct EvalOptions {
  std::string checkpoint;
  DataOptions data;
  std::string vocab_file;  // defaults to vocab.txt beside the checkpoint
  std::size_t batch = 64;
  std::uint64_t seed = 1;
};
int RunEval(const EvalOptions& options, std::ostream& out);

struct AblateOptions {
  ModelOptions model;
  DataOptions data;
  OptimOptions optim;
  std::size_t blocks = 2;
  std::size_t heads = 4;
  std::string csv;
  std::uint64_t seed = 1;
};
int RunAblate(const AblateOptions& options, std::ostream& out);

}  // namespace blockbert::cli

#endif  // BLOCKBERT_TOOLS_COMMANDS_H_
