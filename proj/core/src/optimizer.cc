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

#include "blockbert/optimizer.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "blockbert/errors.h"
#include "blockbert/numerics.h"

namespace blockbert {

std::size_t ProportionalWarmup(std::size_t total_steps) {
  const double w = std::round(static_cast<double>(total_steps) * 10000.0 /
                              2400000.0);
  return std::max<std::size_t>(1, static_cast<std::size_t>(w));
}

double LearningRate(const AdamConfig& config, std::size_t step) {
  const double s = static_cast<double>(step);
  if (config.warmup_steps > 0 && step <= config.warmup_steps) {
    return config.peak_lr * s / static_cast<double>(config.warmup_steps);
  }
  if (config.total_steps == 0 || config.total_steps <= config.warmup_steps) {
    return config.peak_lr;
  }
  const double remaining =
      static_cast<double>(config.total_steps) - s;
  const double span =
      static_cast<double>(config.total_steps - config.warmup_steps);
  return config.peak_lr * std::max(0.0, remaining / span);
}

AdamState MakeAdamState(const std::vector<const Tensor*>& params) {
  AdamState state;
  for (const Tensor* p : params) {
    state.m.emplace_back(p->shape());
    state.v.emplace_back(p->shape());
  }
  return state;
}

AdamStepInfo AdamStep(const std::vector<Tensor*>& params,
                      const std::vector<const Tensor*>& grads,
                      AdamState& state, const AdamConfig& config) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) +
                         " params, " + std::to_string(grads.size()) +
                         " grads, " + std::to_string(state.m.size()) +
                         " moment slots");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i]->shape() ||
        params[i]->shape() != state.m[i].shape()) {
      throw DimensionError("adam_step: shape mismatch at parameter " +
                           std::to_string(i));
    }
    if (!AllFinite(*grads[i])) {
      throw DivergenceError("non-finite gradient at parameter " +
                            std::to_string(i));
    }
    for (double g : grads[i]->values()) sq += g * g;
  }
  AdamStepInfo info;
  info.grad_norm = std::sqrt(sq);
  const double clip = config.clip_norm > 0.0 && info.grad_norm > config.clip_norm
                          ? config.clip_norm / info.grad_norm
                          : 1.0;
  state.step += 1;
  info.lr = LearningRate(config, state.step);
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->values();
    const auto g = grads[i]->values();
    auto m = state.m[i].values();
    auto v = state.v[i].values();
    const double decay = params[i]->rank() >= 2 ? config.weight_decay : 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j] * clip;
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * gj;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * gj * gj;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= info.lr * (mhat / (std::sqrt(vhat) + config.epsilon) +
                         decay * p[j]);
    }
  }
  return info;
}

}  // namespace blockbert
