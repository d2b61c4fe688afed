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

#include "blockbert/training.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <ostream>

#include "blockbert/checkpoint.h"
#include "blockbert/errors.h"
#include "blockbert/memory_tracker.h"
#include "blockbert/random.h"

namespace blockbert {
namespace {

// Streams for MixSeed so that batches, corruption and dropout never share
// random numbers.
constexpr std::uint64_t kBatchStream = 1;
constexpr std::uint64_t kMaskStream = 2;
constexpr std::uint64_t kDropoutStream = 3;
constexpr std::uint64_t kInitStream = 4;

std::vector<const Tensor*> ConstPointers(const ModelParams& p) {
  std::vector<const Tensor*> out;
  for (const auto& n : p.List()) out.push_back(n.tensor);
  return out;
}

std::vector<Tensor*> Pointers(ModelParams& p) {
  std::vector<Tensor*> out;
  for (const auto& n : p.List()) out.push_back(n.tensor);
  return out;
}

std::string Format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

void WriteSnapshot(const TrainState& state, const ModelConfig& model,
                   const TrainConfig& train) {
  std::filesystem::create_directories(train.checkpoint_dir);
  Checkpoint ckpt{model, state.params, train.seed, state.adam};
  const std::string name =
      "ckpt-" + std::to_string(state.adam.step) + ".bblk";
  SaveCheckpoint((std::filesystem::path(train.checkpoint_dir) / name).string(),
                 ckpt);
}

}  // namespace

TrainState InitTrainState(const ModelConfig& model, std::uint64_t seed) {
  TrainState state;
  state.params = ModelParams::Initialize(model, MixSeed(seed, kInitStream));
  state.adam = MakeAdamState(ConstPointers(state.params));
  return state;
}

std::string LogHeader() { return "step,loss,lr,tokens_per_sec,peak_act_bytes"; }

std::string FormatLogRow(const LogRow& row) {
  return std::to_string(row.step) + "," + Format("%.17g", row.loss) + "," +
         Format("%.17g", row.lr) + "," + Format("%.1f", row.tokens_per_sec) +
         "," + std::to_string(row.peak_act_bytes);
}

std::string FormatLogRowWithoutTiming(const LogRow& row) {
  return std::to_string(row.step) + "," + Format("%.17g", row.loss) + "," +
         Format("%.17g", row.lr) + ",," + std::to_string(row.peak_act_bytes);
}

MlmBatch TrainingBatch(std::span<const PackedSequence> corpus,
                       const ModelConfig& model, const TrainConfig& train,
                       std::size_t step) {
  if (corpus.empty()) throw ArgumentError("training corpus is empty");
  if (train.batch_size == 0) throw ArgumentError("batch_size must be positive");
  Rng rng(MixSeed(train.seed, kBatchStream, step));
  std::vector<PackedSequence> rows;
  rows.reserve(train.batch_size);
  for (std::size_t r = 0; r < train.batch_size; ++r) {
    const PackedSequence& seq = corpus[UniformIndex(rng, corpus.size())];
    if (seq.length() != model.seq_len) {
      throw DimensionError("corpus sequence of length " +
                           std::to_string(seq.length()) + ", model N=" +
                           std::to_string(model.seq_len));
    }
    rows.push_back(seq);
  }
  return MakeMlmBatch(rows, train.mask_rate, model.vocab,
                      MixSeed(train.seed, kMaskStream, step));
}

LogRow TrainStep(TrainState& state, std::span<const PackedSequence> corpus,
                 const ModelConfig& model, const TrainConfig& train) {
  const std::size_t step = state.adam.step + 1;
  const MlmBatch batch = TrainingBatch(corpus, model, train, step);
  if (batch.batch == 0) {
    throw ArgumentError("step " + std::to_string(step) +
                        ": every row of the batch was skipped");
  }
  const auto start = std::chrono::steady_clock::now();
  MemoryTracker& tracker = MemoryTracker::Global();
  const std::size_t live_before = tracker.live_bytes();
  tracker.ResetPeak();

  Rng dropout_rng(MixSeed(train.seed, kDropoutStream, step));
  ForwardOptions options;
  options.train = true;
  options.rng = &dropout_rng;
  options.key_valid = batch.attention_allowed;
  LogRow row;
  row.step = step;
  {
    ForwardCache cache;
    const Tensor logits = ModelForward(batch.input, batch.batch, state.params,
                                       model, options, &cache);
    LossAndGrad lg = MlmLossWithGrad(logits, batch.target, batch.loss_mask);
    if (!std::isfinite(lg.loss)) {
      throw DivergenceError("non-finite loss at step " + std::to_string(step));
    }
    row.loss = lg.loss;
    const ModelParams grads =
        ModelBackward(state.params, model, cache, lg.dlogits);
    const std::size_t peak = tracker.peak_bytes();
    std::size_t grad_bytes = 0;
    for (const auto& g : grads.List()) grad_bytes += g.tensor->bytes();
    const std::size_t baseline = live_before + grad_bytes;
    row.peak_act_bytes = peak > baseline ? peak - baseline : 0;
    const AdamStepInfo info = AdamStep(Pointers(state.params),
                                       ConstPointers(grads), state.adam,
                                       train.adam);
    row.lr = info.lr;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  row.tokens_per_sec =
      seconds > 0.0
          ? static_cast<double>(batch.batch * batch.seq_len) / seconds
          : 0.0;
  return row;
}

std::vector<LogRow> TrainLoop(TrainState& state,
                              std::span<const PackedSequence> corpus,
                              const ModelConfig& model,
                              const TrainConfig& train, std::ostream* log) {
  model.Validate();
  std::vector<LogRow> rows;
  TrainState good = state;
  if (log && state.adam.step == 0) *log << LogHeader() << "\n";
  while (state.adam.step < train.max_steps) {
    try {
      rows.push_back(TrainStep(state, corpus, model, train));
    } catch (const DivergenceError& e) {
      const std::size_t failed = state.adam.step + 1;
      state = std::move(good);
      throw DivergenceError(std::string(e.what()) + " (step " +
                            std::to_string(failed) +
                            "); restored state from step " +
                            std::to_string(state.adam.step));
    }
    if (log) *log << FormatLogRow(rows.back()) << "\n" << std::flush;
    if (train.checkpoint_interval > 0 &&
        state.adam.step % train.checkpoint_interval == 0) {
      if (!train.checkpoint_dir.empty()) WriteSnapshot(state, model, train);
      good = state;
    }
  }
  return rows;
}

EvalResult EvaluateMlm(const ModelParams& params, const ModelConfig& model,
                       std::span<const PackedSequence> heldout,
                       double mask_rate, std::uint64_t seed,
                       std::size_t batch_size) {
  if (batch_size == 0) throw ArgumentError("batch_size must be positive");
  EvalResult result;
  double total = 0.0;
  for (std::size_t begin = 0; begin < heldout.size(); begin += batch_size) {
    const auto chunk = heldout.subspan(
        begin, std::min(batch_size, heldout.size() - begin));
    const MlmBatch batch =
        MakeMlmBatch(chunk, mask_rate, model.vocab, MixSeed(seed, begin));
    if (batch.batch == 0) continue;
    ForwardOptions options;
    options.key_valid = batch.attention_allowed;
    const Tensor logits =
        ModelForward(batch.input, batch.batch, params, model, options);
    const double loss = MlmLoss(logits, batch.target, batch.loss_mask);
    std::size_t count = 0;
    for (std::uint8_t m : batch.loss_mask) count += m;
    total += loss * static_cast<double>(count);
    result.masked_positions += count;
  }
  if (result.masked_positions == 0) {
    result.mean_loss = std::numeric_limits<double>::quiet_NaN();
    result.perplexity = std::numeric_limits<double>::quiet_NaN();
    return result;
  }
  result.mean_loss = total / static_cast<double>(result.masked_positions);
  result.perplexity = std::exp(result.mean_loss);
  return result;
}

double ValidationPerplexity(const ModelParams& params,
                            const ModelConfig& model,
                            std::span<const PackedSequence> heldout,
                            double mask_rate, std::uint64_t seed) {
  return EvaluateMlm(params, model, heldout, mask_rate, seed).perplexity;
}

std::vector<AblationRow> RunAblation(const ModelConfig& base,
                                     const TrainConfig& train,
                                     std::span<const PackedSequence> corpus,
                                     std::span<const PackedSequence> heldout) {
  std::vector<AblationRow> rows;
  for (const HeadAssignment& assignment :
       EnumerateAssignments(base.heads, base.blocks)) {
    ModelConfig model = base;
    model.assignment = assignment;
    TrainState state = InitTrainState(model, train.seed);
    TrainConfig run = train;
    run.checkpoint_interval = 0;
    const std::vector<LogRow> log = TrainLoop(state, corpus, model, run);
    AblationRow row{assignment, log.empty() ? 0.0 : log.back().loss,
                    EvaluateMlm(state.params, model, heldout, train.mask_rate,
                                train.seed)
                        .mean_loss,
                    false};
    rows.push_back(std::move(row));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].validation_loss < rows[best].validation_loss) best = i;
  }
  if (!rows.empty()) rows[best].best = true;
  return rows;
}

}  // namespace blockbert
