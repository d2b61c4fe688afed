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

#ifndef BLOCKBERT_CORE_OPTIMIZER_H_
#define BLOCKBERT_CORE_OPTIMIZER_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "blockbert/tensor.h"

namespace blockbert {

struct AdamConfig {
  double peak_lr = 2.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Decoupled; not applied to rank-1 tensors (biases, layer-norm params).
  double weight_decay = 0.01;
  // Global L2 norm bound; <= 0 disables clipping.
  double clip_norm = 1.0;
  std::size_t warmup_steps = 0;
  // Linear decay to zero at total_steps; 0 keeps the peak after warmup.
  std::size_t total_steps = 0;
};

// Warmup proportional to a run of total_steps: 10k warmup steps out of a
// 2.4M-step schedule, at least one step.
std::size_t ProportionalWarmup(std::size_t total_steps);

// Learning rate used by the update numbered `step` (1-based).
double LearningRate(const AdamConfig& config, std::size_t step);

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;
};

// Zero moments shaped like `params`.
AdamState MakeAdamState(const std::vector<const Tensor*>& params);

struct AdamStepInfo {
  double grad_norm = 0.0;  // before clipping
  double lr = 0.0;
};

// One bias-corrected AdamW update, in place. Throws DivergenceError on a
// non-finite gradient before touching anything.
AdamStepInfo AdamStep(const std::vector<Tensor*>& params,
                      const std::vector<const Tensor*>& grads,
                      AdamState& state, const AdamConfig& config);

}  // namespace blockbert

#endif  // BLOCKBERT_CORE_OPTIMIZER_H_
