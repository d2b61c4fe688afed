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

// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "blockbert/attention.h"
#include "blockbert/costmodel.h"
#include "blockbert/data.h"
#include "blockbert/encoder.h"
#include "blockbert/masking.h"
#include "blockbert/memory_tracker.h"
#include "blockbert/numerics.h"
#include "blockbert/training.h"
#include "common/oracles.h"

namespace blockbert {
namespace {

struct Check {
  bool pass = true;
  std::string detail;

  void Require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string Fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

Tensor Normal(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t({rows, cols});
  for (double& v : t.values()) v = StandardNormal(rng);
  return t;
}

Permutation RandomPermutation(std::size_t n, Rng& rng) {
  std::vector<int> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = static_cast<int>(i + 1);
  for (std::size_t i = n; i > 1; --i) std::swap(m[i - 1], m[UniformIndex(rng, i)]);
  return Permutation::FromOneBased(m);
}

// 1. Blockwise kernel against masked dense attention.
Check Equivalence() {
  Check c;
  const auto start = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  std::size_t cases = 0;
  for (std::size_t len : {4, 8, 16, 64, 128}) {
    for (std::size_t n : {1, 2, 4}) {
      if (len % n != 0) continue;
      ++cases;
      for (int trial = 0; trial < 50; ++trial) {
        const Permutation perm = RandomPermutation(n, rng);
        const Tensor q = Normal(len, 16, rng), k = Normal(len, 16, rng),
                     v = Normal(len, 16, rng);
        const Tensor dense = testing::FromMatrix(testing::NaiveMaskedAttention(
            testing::ToMatrix(q), testing::ToMatrix(k), testing::ToMatrix(v),
            testing::NaiveBlockMask(len, n, perm.OneBased())));
        worst = std::max(worst, MaxAbsDiff(BlockwiseAttention(q, k, v, n, perm), dense));
        worst = std::max(worst, MaxAbsDiff(BlockwiseAttention(q, k, v, n, perm),
                                           MaskedAttention(q, k, v,
                                                           BuildBlockMask({len, n, perm}))));
      }
    }
  }
  const double secs = Seconds(start);
  c.Require(cases == 15, std::to_string(cases) + " (N, n) cases x 50 trials");
  c.Require(worst <= 1e-10, "max |dev| " + Fmt("%.2e", worst) + " <= 1e-10");
  c.Require(secs < 30.0, Fmt("%.1f", secs) + " s < 30 s");
  return c;
}

ModelConfig TinyConfig(bool dense_reference) {
  ModelConfig m;
  m.layers = 2;
  m.hidden = 16;
  m.heads = 4;
  m.seq_len = 8;
  m.vocab = 32;
  m.blocks = 2;
  m.assignment = HeadAssignment::Parse("2:2");
  m.dropout = 0.0;
  m.attention_dropout = 0.0;
  m.dense_reference_attention = dense_reference;
  return m;
}

// Parameters at N(0, 0.4) around the usual init so gradients are well above
// finite-difference noise.
ModelParams WideParams(const ModelConfig& m, std::uint64_t seed) {
  ModelParams p = ModelParams::Zeros(m);
  Rng rng(seed);
  for (const auto& named : p.List()) {
    const bool gain = named.name.find("gamma") != std::string::npos;
    for (double& v : named.tensor->values())
      v = (gain ? 1.0 : 0.0) + 0.4 * StandardNormal(rng);
  }
  return p;
}

struct TinyBatch {
  std::vector<int> tokens, targets;
  std::vector<std::uint8_t> loss_mask;
};

TinyBatch MakeTinyBatch(const ModelConfig& m, std::size_t batch, Rng& rng) {
  TinyBatch b;
  for (std::size_t i = 0; i < batch * m.seq_len; ++i) {
    b.tokens.push_back(static_cast<int>(UniformIndex(rng, m.vocab)));
    b.targets.push_back(static_cast<int>(UniformIndex(rng, m.vocab)));
    b.loss_mask.push_back(i % 3 != 1);
  }
  return b;
}

ModelParams Grads(const ModelParams& p, const ModelConfig& m, const TinyBatch& b,
                  std::size_t batch) {
  ForwardCache cache;
  const Tensor logits = ModelForward(b.tokens, batch, p, m, {}, &cache);
  return ModelBackward(p, m, cache, MlmLossWithGrad(logits, b.targets, b.loss_mask).dlogits);
}

// 2. Full finite-difference sweep, then blockwise vs dense-path backward.
Check Gradients() {
  Check c;
  const auto start = Clock::now();
  const ModelConfig m = TinyConfig(false);
  ModelParams p = WideParams(m, 202);
  Rng rng(203);
  const std::size_t batch = 2;
  const TinyBatch b = MakeTinyBatch(m, batch, rng);
  const ModelParams g = Grads(p, m, b, batch);
  auto loss = [&] {
    return MlmLoss(ModelForward(b.tokens, batch, p, m, {}), b.targets, b.loss_mask);
  };
  const double h = 1e-4;
  double worst = 0.0;
  std::size_t checked = 0;
  auto params = p.List();
  const auto grads = g.List();
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& x = *params[t].tensor;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double old = x[i];
      auto at = [&](double delta) {
        x[i] = old + delta;
        return loss();
      };
      const double fd =
          (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
      x[i] = old;
      const double an = (*grads[t].tensor)[i];
      worst = std::max(worst, std::abs(fd - an) /
                                  std::max({std::abs(fd), std::abs(an), 1e-4}));
      ++checked;
    }
  }
  c.Require(worst <= 1e-4, std::to_string(checked) + " params, max rel err " +
                               Fmt("%.2e", worst) + " <= 1e-4");

  const ModelConfig dense = TinyConfig(true);
  const ModelParams gd = Grads(p, dense, b, batch);
  double diff = 0.0;
  const auto lb = g.List(), ld = gd.List();
  for (std::size_t t = 0; t < lb.size(); ++t)
    diff = std::max(diff, MaxAbsDiff(*lb[t].tensor, *ld[t].tensor));
  c.Require(diff <= 1e-10, "blockwise vs dense backward " + Fmt("%.2e", diff) + " <= 1e-10");
  const double secs = Seconds(start);
  c.Require(secs < 120.0, Fmt("%.1f", secs) + " s < 120 s");
  return c;
}

// 3. Score bytes shrink by exactly n; reduction table from a fitted line.
Check MemoryReduction() {
  Check c;
  auto& tracker = MemoryTracker::Global();
  ScopedTrackingSession session;
  Rng rng(301);
  const std::size_t len = 256, d = 64;
  const Tensor q = Normal(len, d, rng), k = Normal(len, d, rng), v = Normal(len, d, rng);
  auto single_head = [&](std::size_t n) {
    tracker.ResetPeak();
    const std::size_t base = tracker.peak_bytes(MemoryCategory::kAttentionScores);
    BlockwiseCache cache;
    (void)BlockwiseAttention(q, k, v, n, Permutation::Shift(n, 1),
                             {}, &cache);
    return tracker.peak_bytes(MemoryCategory::kAttentionScores) - base;
  };
  ModelConfig m;
  m.layers = 2;
  m.hidden = 32;
  m.heads = 4;
  m.seq_len = 64;
  m.vocab = 64;
  auto model = [&](std::size_t n) {
    m.blocks = n;
    m.assignment = HeadAssignment::AllIdentity(4, n);
    const ModelParams p = ModelParams::Initialize(m, 7);
    std::vector<int> tokens(2 * m.seq_len, 5);
    Rng drop(9);
    ForwardOptions o;
    o.train = true;
    o.rng = &drop;
    return ProfileActivation([&] {
             ForwardCache cache;
             (void)ModelForward(tokens, 2, p, m, o, &cache);
           })
        .score_peak_bytes;
  };
  const std::size_t s1 = single_head(1), m1 = model(1);
  for (std::size_t n : {2, 4}) {
    const std::size_t sn = single_head(n), mn = model(n);
    c.Require(s1 == n * sn, "single head n=" + std::to_string(n) + ": " +
                                std::to_string(s1) + "/" + std::to_string(sn));
    c.Require(m1 == n * mn, "model n=" + std::to_string(n) + ": " +
                                std::to_string(m1) + "/" + std::to_string(mn));
  }
  RegressionFit line;
  line.slope = 0.00715;
  line.linear_term = 4.83;
  const std::vector<std::size_t> lens = {512, 1024}, blocks = {1, 2, 3};
  const auto rows = ReductionTable(line, lens, blocks);
  const double expected[] = {3.66, 1.83, 1.22, 7.32, 3.66, 2.44};
  double worst = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    worst = std::max(worst, std::abs(rows[i].quadratic - expected[i]));
  c.Require(rows.size() == 6 && worst <= 0.01,
            "reduction table max |dev| " + Fmt("%.4f", worst) + " GB <= 0.01");
  return c;
}

// 4. Regression recovery and measured slope ratio.
Check Regression() {
  Check c;
  const auto start = Clock::now();
  const std::vector<std::size_t> lens = {128, 256, 512, 1024};
  const double a2 = 2.5e-3, a1 = 37.0, a0 = 2.0e6;
  const RegressionFit syn =
      RegressActivation(SyntheticRegressionPoints(a2, a1, a0, 4096, lens));
  const double want = 4096 * a1 + a0;
  const double err = std::max(std::abs(syn.a2 - a2) / a2,
                              std::abs(syn.linear_term - want) / want);
  c.Require(err <= 1e-9, "synthetic rel err " + Fmt("%.1e", err) + " <= 1e-9");

  ModelConfig m;
  m.layers = 1;
  m.hidden = 64;
  m.heads = 4;
  m.vocab = 64;
  ScopedTrackingSession session;
  std::vector<RegressionFit> fits;
  for (std::size_t n : {1, 2}) {
    m.blocks = n;
    m.assignment = HeadAssignment::AllIdentity(4, n);
    fits.push_back(RegressActivation(MeasureActivationPoints(m, 4096, lens, 11)));
  }
  const double ratio = fits[0].slope / fits[1].slope;
  c.Require(std::abs(ratio - 2.0) <= 0.2, "slope ratio n=1/n=2 " + Fmt("%.4f", ratio));
  c.Require(fits[0].r_squared >= 0.99 && fits[1].r_squared >= 0.99,
            "R^2 " + Fmt("%.6f", fits[0].r_squared) + ", " + Fmt("%.6f", fits[1].r_squared));
  const double secs = Seconds(start);
  c.Require(secs < 300.0, Fmt("%.1f", secs) + " s < 300 s");
  return c;
}

// 5. Permutation-mask structure and sparse-fixed densities.
Check MaskProperties() {
  Check c;
  bool density = true, lines = true, partition = true;
  for (std::size_t len : {8, 12, 64, 96, 512}) {
    for (std::size_t n : {1, 2, 3, 4, 8}) {
      if (len % n != 0) continue;
      Mask cover(len, len, false);
      std::size_t total = 0;
      for (std::size_t k = 1; k <= n; ++k) {
        const Mask mk = BuildBlockMask({len, n, Permutation::Shift(n, k)});
        density &= mk.CountSet() * n == len * len;
        for (std::size_t i = 0; i < len; ++i)
          lines &= mk.RowCount(i) == len / n && mk.ColCount(i) == len / n;
        total += mk.CountSet();
        cover = cover | mk;
      }
      partition &= total == len * len && cover == Mask::Full(len);
    }
  }
  c.Require(density, "density exactly 1/n");
  c.Require(lines, "N/n ones per row and column");
  c.Require(partition, "shift masks partition the all-ones matrix");
  const double d512 = MaskDensity(BuildSparseFixedMask({512, 128, 32}));
  const double d1024 = MaskDensity(BuildSparseFixedMask({1024, 128, 32}));
  c.Require(std::abs(d512 - 0.4420) <= 0.001, "sparse N=512 " + Fmt("%.5f", d512));
  c.Require(std::abs(d1024 - 0.3497) <= 0.001, "sparse N=1024 " + Fmt("%.5f", d1024));
  return c;
}

// 6. Forward wall-clock at N=2048, d=64, one head.
Check Throughput() {
  Check c;
  Rng rng(601);
  const std::size_t len = 2048, d = 64;
  const Tensor q = Normal(len, d, rng), k = Normal(len, d, rng), v = Normal(len, d, rng);
  auto best_of = [](int reps, const std::function<void()>& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
      const auto t0 = Clock::now();
      f();
      best = std::min(best, Seconds(t0));
    }
    return best;
  };
  const double dense = best_of(3, [&] { (void)Attention(q, k, v); });
  const double block = best_of(3, [&] {
    (void)BlockwiseAttention(q, k, v, 2, Permutation::Shift(2, 1));
  });
  const double ratio = block / dense;
  c.Require(ratio <= 0.75, "blockwise n=2 " + Fmt("%.1f", block * 1e3) + " ms vs dense " +
                               Fmt("%.1f", dense * 1e3) + " ms, ratio " +
                               Fmt("%.3f", ratio) + " <= 0.75");
  return c;
}

ModelConfig CopyModel(const char* assignment) {
  ModelConfig m;
  m.layers = 2;
  m.hidden = 32;
  m.seq_len = 64;
  m.vocab = 64;
  m.assignment = HeadAssignment::Parse(assignment);
  m.heads = m.assignment.total_heads();
  m.blocks = m.assignment.num_blocks();
  m.dropout = 0.0;
  m.attention_dropout = 0.0;
  return m;
}

TrainConfig CopyTrain(std::size_t steps) {
  TrainConfig t;
  t.batch_size = 32;
  t.max_steps = steps;
  t.seed = 7;
  t.adam.peak_lr = 1e-2;
  t.adam.warmup_steps = ProportionalWarmup(steps);
  t.adam.total_steps = steps;
  return t;
}

// 7. Copy-task training, determinism and the head-assignment sweep.
Check Training() {
  Check c;
  const auto start = Clock::now();
  const double target = 0.5 * std::log(64.0);
  const auto corpus = CopyTaskSequences(4096, 64, 64, 1);
  const auto heldout = CopyTaskSequences(256, 64, 64, 2);
  const ModelConfig m = CopyModel("2:0:0:0:2:0:0:0");
  const TrainConfig t = CopyTrain(200);
  std::vector<std::string> logs[2];
  EvalResult eval;
  for (auto& log : logs) {
    TrainState s = InitTrainState(m, t.seed);
    for (const LogRow& r : TrainLoop(s, corpus, m, t)) log.push_back(FormatLogRowWithoutTiming(r));
    eval = EvaluateMlm(s.params, m, heldout, t.mask_rate, 3);
  }
  const double final_loss = std::stod(logs[0].back().substr(logs[0].back().find(',') + 1));
  c.Require(logs[0].size() == 200 && final_loss < target,
            "step-200 loss " + Fmt("%.4f", final_loss) + " < " + Fmt("%.4f", target));
  c.Require(eval.perplexity < 64.0, "validation ppl " + Fmt("%.3f", eval.perplexity) + " < 64");
  c.Require(logs[0] == logs[1], "identical seeds give identical logs");

  const ModelConfig base = CopyModel("4:0");
  const auto rows = RunAblation(base, CopyTrain(200), corpus, heldout);
  double identity = 0.0, best_mixed = 1e300;
  std::string best_name;
  for (const auto& r : rows) {
    const auto& counts = r.assignment.counts();
    if (counts[0] == base.heads) {
      identity = r.validation_loss;
    } else if (r.validation_loss < best_mixed) {
      best_mixed = r.validation_loss;
      best_name = r.assignment.ToString();
    }
  }
  c.Require(rows.size() == 5 && best_mixed < identity,
            "best mixed " + best_name + " val loss " + Fmt("%.4f", best_mixed) +
                " < all-identity " + Fmt("%.4f", identity));
  const double secs = Seconds(start);
  c.Require(secs < 600.0, Fmt("%.1f", secs) + " s < 600 s");
  return c;
}

}  // namespace
}  // namespace blockbert

int main() {
  using namespace blockbert;
  const std::vector<std::pair<const char*, std::function<Check()>>> criteria = {
      {"1 blockwise/dense equivalence", Equivalence},
      {"2 gradient correctness", Gradients},
      {"3 factor-n score memory", MemoryReduction},
      {"4 activation regression", Regression},
      {"5 mask properties", MaskProperties},
      {"6 blockwise forward throughput", Throughput},
      {"7 end-to-end copy task", Training},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Check result;
    try {
      result = run();
    } catch (const std::exception& e) {
      result.pass = false;
      result.detail = std::string("exception: ") + e.what();
    }
    if (!result.pass) ++failures;
    std::printf("%s  criterion %s: %s\n", result.pass ? "PASS" : "FAIL", name,
                result.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
