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

#ifndef BLOCKBERT_CORE_COSTMODEL_H_
#define BLOCKBERT_CORE_COSTMODEL_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "blockbert/encoder.h"

namespace blockbert {

// FLOPs below count one multiply-add as 2 FLOPs.

// Q K^T FLOPs for one head in one layer: 2 (N^2 / n) d. n must divide N.
std::uint64_t ScoreFlops(std::size_t seq_len, std::size_t head_dim,
                         std::size_t blocks);
// Scores plus the probability-value product over A heads and L layers.
std::uint64_t AttentionFlops(std::size_t seq_len, std::size_t head_dim,
                             std::size_t heads, std::size_t layers,
                             std::size_t blocks);
// Q, K, V and output projections: 4 matmuls of N x H by H x H per layer.
std::uint64_t ProjectionFlops(std::size_t seq_len, std::size_t hidden,
                              std::size_t layers);
std::uint64_t FfnFlops(std::size_t seq_len, std::size_t hidden,
                       std::size_t ffn_hidden, std::size_t layers);
// Score entries held for one sequence: (N^2 / n) per head-layer, times A L.
std::uint64_t AttentionScoreFloats(std::size_t seq_len, std::size_t heads,
                                   std::size_t layers, std::size_t blocks);

// Per-sequence estimates for a model configuration.
struct CostReport {
  std::size_t seq_len = 0;
  std::size_t hidden = 0;
  std::size_t heads = 0;
  std::size_t layers = 0;
  std::size_t blocks = 1;
  std::uint64_t attention_score_floats = 0;
  std::uint64_t attention_flops = 0;
  std::uint64_t projection_flops = 0;
  std::uint64_t ffn_flops = 0;
  // Dense score floats over blockwise score floats; equals `blocks`.
  double reduction_factor = 1.0;
};

CostReport EstimateCost(const ModelConfig& config);

struct MemoryBreakdown {
  std::uint64_t model_bytes = 0;
  std::uint64_t optimizer_bytes = 0;
  std::uint64_t activation_bytes = 0;

  std::uint64_t total() const {
    return model_bytes + optimizer_bytes + activation_bytes;
  }
};

// Analytic parameter count; matches ModelParams::ParameterCount().
std::uint64_t ParameterCount(const ModelConfig& config);

// BERT-Base shape with tied MLM head and a 30,522-entry vocabulary.
ModelConfig BertBaseConfig();

// Model = parameters x bytes_per_param; optimizer = multiplier x model.
// The multiplier is 3 (gradients and two moments at parameter precision) or
// 5 (moments kept in single precision next to half-precision parameters).
MemoryBreakdown StaticMemory(std::uint64_t parameter_count,
                             std::size_t bytes_per_param,
                             std::size_t optimizer_multiplier);
MemoryBreakdown StaticMemory(const ModelConfig& config,
                             std::size_t bytes_per_param,
                             std::size_t optimizer_multiplier);

struct ActivationProfile {
  std::uint64_t peak_bytes = 0;  // live-byte high-water mark during the run
  std::uint64_t static_bytes = 0;
  std::uint64_t activation_bytes = 0;  // peak - static, never negative
  std::uint64_t score_peak_bytes = 0;
};

// Runs `run` under the enabled global tracker and reports the high-water
// mark minus the static memory. The first overload treats whatever is live
// when the run starts as static; the second subtracts model and optimizer
// bytes. Throws ProfilingError when the tracker is disabled.
ActivationProfile ProfileActivation(const std::function<void()>& run);
ActivationProfile ProfileActivation(const std::function<void()>& run,
                                    const MemoryBreakdown& static_memory);

struct RegressionPoint {
  std::size_t seq_len = 0;
  std::size_t batch = 0;
  double bytes = 0.0;
};

// bytes = a2 b N^2 + a1 b N + a0 with b N = C fixed collapses to the line
// bytes = (C a2) N + (C a1 + a0). Only the combined intercept is
// identifiable, so it is reported as `linear_term`.
struct RegressionFit {
  double tokens_per_batch = 0.0;   // C
  double slope = 0.0;              // C a2
  double linear_term = 0.0;        // C a1 + a0
  double a2 = 0.0;
  double r_squared = 0.0;

  double QuadraticPart(std::size_t seq_len) const {
    return slope * static_cast<double>(seq_len);
  }
};

// Needs at least 3 distinct N and one b N shared by every point
// (ArgumentError otherwise).
RegressionFit RegressActivation(std::span<const RegressionPoint> points);

// Profiles one train-mode cached forward per N at batch C / N over random
// tokens, with `base` resized to each N. Each N must divide C.
std::vector<RegressionPoint> MeasureActivationPoints(
    const ModelConfig& base, std::size_t tokens_per_batch,
    std::span<const std::size_t> seq_lens, std::uint64_t seed);

// Points sampled exactly from a2 b N^2 + a1 b N + a0 with b = C / N.
std::vector<RegressionPoint> SyntheticRegressionPoints(
    double a2, double a1, double a0, std::size_t tokens_per_batch,
    std::span<const std::size_t> seq_lens);

struct ReductionRow {
  std::size_t seq_len = 0;
  std::size_t batch = 0;
  std::size_t blocks = 1;
  double linear = 0.0;     // O(N) estimate
  double quadratic = 0.0;  // O(N^2) estimate, the dense value divided by n
};

// One row per (N, n): the fitted line's quadratic part at N shared across n
// blocks, and its unchanged linear term.
std::vector<ReductionRow> ReductionTable(const RegressionFit& fit,
                                         std::span<const std::size_t> seq_lens,
                                         std::span<const std::size_t> blocks);

// CSV rows `config,N,n,metric,value` with a header.
void WriteReductionCsv(std::ostream& os, const std::string& config,
                       std::span<const ReductionRow> rows);
// Aligned table for humans.
void PrintReductionTable(std::ostream& os, std::span<const ReductionRow> rows,
                         const std::string& unit);
void WriteCostReportCsv(std::ostream& os, const std::string& config,
                        const CostReport& report);

}  // namespace blockbert

#endif  // BLOCKBERT_CORE_COSTMODEL_H_
