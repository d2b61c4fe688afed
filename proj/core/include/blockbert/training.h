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

#ifndef BLOCKBERT_CORE_TRAINING_H_
#define BLOCKBERT_CORE_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "blockbert/data.h"
#include "blockbert/encoder.h"
#include "blockbert/optimizer.h"

namespace blockbert {

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t max_steps = 200;
  std::uint64_t seed = 0;
  double mask_rate = 0.15;
  // 0 disables; a positive interval writes ckpt-<step>.bblk into
  // checkpoint_dir and refreshes the last good snapshot.
  std::size_t checkpoint_interval = 0;
  std::string checkpoint_dir;
  AdamConfig adam;
};

struct TrainState {
  ModelParams params;
  AdamState adam;
};

TrainState InitTrainState(const ModelConfig& model, std::uint64_t seed);

struct LogRow {
  std::size_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
  double tokens_per_sec = 0.0;
  std::size_t peak_act_bytes = 0;
};

std::string LogHeader();  // step,loss,lr,tokens_per_sec,peak_act_bytes
std::string FormatLogRow(const LogRow& row);
// Same row without the timing column value, for reproducibility checks.
std::string FormatLogRowWithoutTiming(const LogRow& row);

// Batch for update number `step` (1-based): batch_size sequences drawn with
// replacement and corrupted, both from (seed, step) only.
MlmBatch TrainingBatch(std::span<const PackedSequence> corpus,
                       const ModelConfig& model, const TrainConfig& train,
                       std::size_t step);

// Forward, loss, backward and one Adam update; state.adam.step advances.
// peak_act_bytes is the step's live-byte high-water mark minus the bytes
// that were live when the step began and the gradient buffers.
LogRow TrainStep(TrainState& state, std::span<const PackedSequence> corpus,
                 const ModelConfig& model, const TrainConfig& train);

// Runs until state.adam.step == train.max_steps, appending CSV rows to `log`
// when non-null. On a non-finite loss or gradient the state is rolled back
// to the last good snapshot (initial state or latest checkpoint) and the
// DivergenceError is rethrown.
std::vector<LogRow> TrainLoop(TrainState& state,
                              std::span<const PackedSequence> corpus,
                              const ModelConfig& model,
                              const TrainConfig& train,
                              std::ostream* log = nullptr);

struct EvalResult {
  double mean_loss = 0.0;
  double perplexity = 0.0;
  std::size_t masked_positions = 0;
};

// exp(mean MLM cross-entropy) over every masked position of `heldout`, in
// eval mode (no dropout). Corruption uses `seed`, so repeated calls agree.
EvalResult EvaluateMlm(const ModelParams& params, const ModelConfig& model,
                       std::span<const PackedSequence> heldout,
                       double mask_rate, std::uint64_t seed,
                       std::size_t batch_size = 64);
double ValidationPerplexity(const ModelParams& params,
                            const ModelConfig& model,
                            std::span<const PackedSequence> heldout,
                            double mask_rate, std::uint64_t seed);

struct AblationRow {
  HeadAssignment assignment;
  double final_train_loss = 0.0;
  double validation_loss = 0.0;
  bool best = false;
};

// Trains one model per head assignment of `base.heads` heads over
// `base.blocks` blocks, each from the same seed, and marks the lowest
// validation loss.
std::vector<AblationRow> RunAblation(const ModelConfig& base,
                                     const TrainConfig& train,
                                     std::span<const PackedSequence> corpus,
                                     std::span<const PackedSequence> heldout);

}  // namespace blockbert

#endif  // BLOCKBERT_CORE_TRAINING_H_
