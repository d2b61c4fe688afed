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

#include "blockbert/costmodel.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

#include "blockbert/data.h"
#include "blockbert/errors.h"
#include "blockbert/memory_tracker.h"
#include "blockbert/numerics.h"
#include "blockbert/random.h"

namespace blockbert {
namespace {

void CheckBlocks(std::size_t seq_len, std::size_t blocks) {
  if (blocks == 0 || seq_len % blocks != 0) {
    throw PaddingRequiredError("n=" + std::to_string(blocks) +
                               " does not divide N=" + std::to_string(seq_len));
  }
}

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::uint64_t ScoreFlops(std::size_t seq_len, std::size_t head_dim,
                         std::size_t blocks) {
  CheckBlocks(seq_len, blocks);
  const std::uint64_t n = seq_len;
  return 2 * (n * n / blocks) * head_dim;
}

std::uint64_t AttentionFlops(std::size_t seq_len, std::size_t head_dim,
                             std::size_t heads, std::size_t layers,
                             std::size_t blocks) {
  return 2 * ScoreFlops(seq_len, head_dim, blocks) * heads * layers;
}

std::uint64_t ProjectionFlops(std::size_t seq_len, std::size_t hidden,
                              std::size_t layers) {
  const std::uint64_t h = hidden;
  return 2 * 4 * static_cast<std::uint64_t>(seq_len) * h * h * layers;
}

std::uint64_t FfnFlops(std::size_t seq_len, std::size_t hidden,
                       std::size_t ffn_hidden, std::size_t layers) {
  return 2 * 2 * static_cast<std::uint64_t>(seq_len) * hidden * ffn_hidden *
         layers;
}

std::uint64_t AttentionScoreFloats(std::size_t seq_len, std::size_t heads,
                                   std::size_t layers, std::size_t blocks) {
  CheckBlocks(seq_len, blocks);
  const std::uint64_t n = seq_len;
  return (n * n / blocks) * heads * layers;
}

CostReport EstimateCost(const ModelConfig& config) {
  config.Validate();
  CostReport r;
  r.seq_len = config.seq_len;
  r.hidden = config.hidden;
  r.heads = config.heads;
  r.layers = config.layers;
  r.blocks = config.blocks;
  r.attention_score_floats = AttentionScoreFloats(
      config.seq_len, config.heads, config.layers, config.blocks);
  r.attention_flops = AttentionFlops(config.seq_len, config.head_dim(),
                                     config.heads, config.layers, config.blocks);
  r.projection_flops =
      ProjectionFlops(config.seq_len, config.hidden, config.layers);
  r.ffn_flops =
      FfnFlops(config.seq_len, config.hidden, config.ffn(), config.layers);
  r.reduction_factor =
      static_cast<double>(AttentionScoreFloats(config.seq_len, config.heads,
                                               config.layers, 1)) /
      static_cast<double>(r.attention_score_floats);
  return r;
}

std::uint64_t ParameterCount(const ModelConfig& c) {
  const std::uint64_t h = c.hidden, f = c.ffn(), v = c.vocab;
  const std::uint64_t per_layer = 3 * h * h  // per-head Q, K, V, A x (H x d)
                                  + h * h + h       // W^O and its bias
                                  + 2 * h           // layer norm 1
                                  + h * f + f + f * h + h  // feed-forward
                                  + 2 * h;          // layer norm 2
  std::uint64_t total = v * h + c.seq_len * h + 2 * h + c.layers * per_layer;
  if (!c.tie_embeddings) total += h * v;
  return total + v;
}

ModelConfig BertBaseConfig() {
  ModelConfig c;
  c.layers = 12;
  c.hidden = 768;
  c.heads = 12;
  c.seq_len = 512;
  c.blocks = 1;
  c.vocab = 30522;
  c.assignment = HeadAssignment::AllIdentity(12, 1);
  c.tie_embeddings = true;
  return c;
}

MemoryBreakdown StaticMemory(std::uint64_t parameter_count,
                             std::size_t bytes_per_param,
                             std::size_t optimizer_multiplier) {
  if (optimizer_multiplier != 3 && optimizer_multiplier != 5) {
    throw ArgumentError("optimizer multiplier must be 3 or 5, got " +
                        std::to_string(optimizer_multiplier));
  }
  MemoryBreakdown m;
  m.model_bytes = parameter_count * bytes_per_param;
  m.optimizer_bytes = optimizer_multiplier * m.model_bytes;
  return m;
}

MemoryBreakdown StaticMemory(const ModelConfig& config,
                             std::size_t bytes_per_param,
                             std::size_t optimizer_multiplier) {
  return StaticMemory(ParameterCount(config), bytes_per_param,
                      optimizer_multiplier);
}

namespace {

ActivationProfile Profile(const std::function<void()>& run,
                          const std::uint64_t* static_bytes) {
  MemoryTracker& tracker = MemoryTracker::Global();
  if (!tracker.enabled()) {
    throw ProfilingError("allocation tracker is disabled");
  }
  ActivationProfile p;
  const std::uint64_t live = tracker.live_bytes();
  const std::uint64_t score_live = tracker.live_bytes(MemoryCategory::kAttentionScores);
  tracker.ResetPeak();
  run();
  p.peak_bytes = tracker.peak_bytes();
  p.static_bytes = static_bytes ? *static_bytes : live;
  p.activation_bytes =
      p.peak_bytes > p.static_bytes ? p.peak_bytes - p.static_bytes : 0;
  const std::uint64_t score_peak =
      tracker.peak_bytes(MemoryCategory::kAttentionScores);
  p.score_peak_bytes = score_peak > score_live ? score_peak - score_live : 0;
  return p;
}

}  // namespace

ActivationProfile ProfileActivation(const std::function<void()>& run) {
  return Profile(run, nullptr);
}

ActivationProfile ProfileActivation(const std::function<void()>& run,
                                    const MemoryBreakdown& static_memory) {
  const std::uint64_t s = static_memory.model_bytes + static_memory.optimizer_bytes;
  return Profile(run, &s);
}

std::vector<RegressionPoint> MeasureActivationPoints(
    const ModelConfig& base, std::size_t tokens_per_batch,
    std::span<const std::size_t> seq_lens, std::uint64_t seed) {
  std::vector<RegressionPoint> points;
  for (std::size_t n_len : seq_lens) {
    if (n_len == 0 || tokens_per_batch % n_len != 0) {
      throw ArgumentError("N=" + std::to_string(n_len) +
                          " must divide tokens per batch " +
                          std::to_string(tokens_per_batch));
    }
    ModelConfig config = base;
    config.seq_len = n_len;
    const std::size_t batch = tokens_per_batch / n_len;
    const ModelParams params = ModelParams::Initialize(config, seed);
    Rng rng(MixSeed(seed, 5, n_len));
    std::vector<int> tokens(tokens_per_batch);
    for (int& t : tokens) {
      t = kNumReservedIds +
          static_cast<int>(UniformIndex(rng, config.vocab - kNumReservedIds));
    }
    Rng dropout_rng(MixSeed(seed, 3, n_len));
    ForwardOptions options;
    options.train = true;
    options.rng = &dropout_rng;
    const ActivationProfile profile = ProfileActivation([&] {
      ForwardCache cache;
      (void)ModelForward(tokens, batch, params, config, options, &cache);
    });
    points.push_back({n_len, batch, static_cast<double>(profile.activation_bytes)});
  }
  return points;
}

RegressionFit RegressActivation(std::span<const RegressionPoint> points) {
  std::set<std::size_t> distinct;
  for (const auto& p : points) distinct.insert(p.seq_len);
  if (distinct.size() < 3) {
    throw ArgumentError("regression needs at least 3 distinct N, got " +
                        std::to_string(distinct.size()));
  }
  const std::size_t tokens = points[0].seq_len * points[0].batch;
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    if (p.seq_len * p.batch != tokens) {
      throw ArgumentError("inconsistent b*N: " + std::to_string(p.batch) +
                          "*" + std::to_string(p.seq_len) + " != " +
                          std::to_string(tokens));
    }
    xs.push_back(static_cast<double>(p.seq_len));
    ys.push_back(p.bytes);
  }
  const LineFit line = OlsLineFit(xs, ys);
  RegressionFit fit;
  fit.tokens_per_batch = static_cast<double>(tokens);
  fit.slope = line.slope;
  fit.linear_term = line.intercept;
  fit.a2 = line.slope / fit.tokens_per_batch;
  fit.r_squared = RSquared(xs, ys, line);
  return fit;
}

std::vector<RegressionPoint> SyntheticRegressionPoints(
    double a2, double a1, double a0, std::size_t tokens_per_batch,
    std::span<const std::size_t> seq_lens) {
  std::vector<RegressionPoint> out;
  for (std::size_t n : seq_lens) {
    if (n == 0 || tokens_per_batch % n != 0) {
      throw ArgumentError("N=" + std::to_string(n) +
                          " does not divide tokens per batch " +
                          std::to_string(tokens_per_batch));
    }
    const std::size_t b = tokens_per_batch / n;
    const double bn = static_cast<double>(b) * static_cast<double>(n);
    out.push_back({n, b, a2 * bn * static_cast<double>(n) + a1 * bn + a0});
  }
  return out;
}

std::vector<ReductionRow> ReductionTable(const RegressionFit& fit,
                                         std::span<const std::size_t> seq_lens,
                                         std::span<const std::size_t> blocks) {
  std::vector<ReductionRow> rows;
  for (std::size_t n : seq_lens) {
    for (std::size_t k : blocks) {
      if (k == 0) throw ArgumentError("blocks must be positive");
      ReductionRow row;
      row.seq_len = n;
      row.batch = fit.tokens_per_batch > 0
                      ? static_cast<std::size_t>(fit.tokens_per_batch) / n
                      : 0;
      row.blocks = k;
      row.linear = fit.linear_term;
      row.quadratic = fit.QuadraticPart(n) / static_cast<double>(k);
      rows.push_back(row);
    }
  }
  return rows;
}

void WriteReductionCsv(std::ostream& os, const std::string& config,
                       std::span<const ReductionRow> rows) {
  os << "config,N,n,metric,value\n";
  for (const auto& r : rows) {
    os << config << "," << r.seq_len << "," << r.blocks << ",linear,"
       << Fixed(r.linear, 6) << "\n";
    os << config << "," << r.seq_len << "," << r.blocks << ",quadratic,"
       << Fixed(r.quadratic, 6) << "\n";
  }
}

void PrintReductionTable(std::ostream& os, std::span<const ReductionRow> rows,
                         const std::string& unit) {
  char line[160];
  std::snprintf(line, sizeof(line), "%6s %6s %-14s %14s %14s\n", "N", "b",
                "model", ("O(N) " + unit).c_str(), ("O(N^2) " + unit).c_str());
  os << line;
  for (const auto& r : rows) {
    const std::string model =
        r.blocks == 1 ? "dense" : "blockwise n=" + std::to_string(r.blocks);
    std::snprintf(line, sizeof(line), "%6zu %6zu %-14s %14.4f %14.4f\n",
                  r.seq_len, r.batch, model.c_str(), r.linear, r.quadratic);
    os << line;
  }
}

void WriteCostReportCsv(std::ostream& os, const std::string& config,
                        const CostReport& r) {
  os << "# FLOPs count one multiply-add as 2\n";
  os << "config,N,n,metric,value\n";
  auto put = [&](const char* metric, const std::string& value) {
    os << config << "," << r.seq_len << "," << r.blocks << "," << metric << ","
       << value << "\n";
  };
  put("attention_score_floats", std::to_string(r.attention_score_floats));
  put("attention_flops", std::to_string(r.attention_flops));
  put("projection_flops", std::to_string(r.projection_flops));
  put("ffn_flops", std::to_string(r.ffn_flops));
  put("reduction_factor", Fixed(r.reduction_factor, 6));
}

}  // namespace blockbert
