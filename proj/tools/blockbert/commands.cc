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

#include "blockbert/commands.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include "blockbert/attention.h"
#include "blockbert/checkpoint.h"
#include "blockbert/costmodel.h"
#include "blockbert/data.h"
#include "blockbert/errors.h"
#include "blockbert/masking.h"
#include "blockbert/memory_tracker.h"
#include "blockbert/numerics.h"
#include "blockbert/random.h"
#include "blockbert/training.h"

namespace blockbert::cli {
namespace {

namespace fs = std::filesystem;

std::string Format(const char* fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, value);
  return buf;
}

std::ofstream OpenOutput(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write '" + path + "'");
  return os;
}

Tensor RandomNormal(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = StandardNormal(rng);
  return t;
}

Permutation RandomPermutation(std::size_t n, Rng& rng) {
  std::vector<int> mapping(n);
  for (std::size_t i = 0; i < n; ++i) mapping[i] = static_cast<int>(i + 1);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(mapping[i - 1], mapping[UniformIndex(rng, i)]);
  }
  return Permutation::FromOneBased(mapping);
}

double Millis(std::chrono::steady_clock::duration d) {
  return std::chrono::duration<double, std::milli>(d).count();
}

// Training and evaluation data at the model's (block-padded) length.
struct Dataset {
  std::vector<PackedSequence> train;
  std::vector<PackedSequence> heldout;
  std::size_t seq_len = 0;
  std::size_t vocab = 0;
  std::optional<Vocab> vocab_table;
};

std::size_t RoundUp(std::size_t value, std::size_t multiple) {
  return (value + multiple - 1) / multiple * multiple;
}

std::vector<PackedSequence> PadAll(std::vector<PackedSequence> seqs,
                                   std::size_t blocks) {
  for (auto& s : seqs) s = PadToBlockMultiple(std::move(s), blocks);
  return seqs;
}

Dataset LoadDataset(const DataOptions& data, std::size_t seq_len,
                    std::size_t vocab, std::size_t blocks, std::uint64_t seed,
                    const Vocab* fixed_vocab, bool whole_corpus_heldout) {
  Dataset ds;
  ds.seq_len = RoundUp(seq_len, blocks);
  if (data.corpus.empty()) {
    ds.vocab = vocab;
    ds.train = PadAll(
        CopyTaskSequences(data.copy_sequences, seq_len, vocab, MixSeed(seed, 6)),
        blocks);
    ds.heldout = PadAll(CopyTaskSequences(data.heldout_sequences, seq_len,
                                          vocab, MixSeed(seed, 7)),
                        blocks);
    return ds;
  }
  const std::string text = ReadTextFile(data.corpus);
  ds.vocab_table = fixed_vocab ? *fixed_vocab : Vocab::Build(text, vocab);
  ds.vocab = fixed_vocab ? vocab : ds.vocab_table->size();
  std::vector<PackedSequence> all =
      PadAll(PackSequences(EncodeDocuments(text, *ds.vocab_table), seq_len),
             blocks);
  if (all.empty()) throw ArgumentError("corpus '" + data.corpus + "' is empty");
  if (whole_corpus_heldout) {
    ds.heldout = std::move(all);
    return ds;
  }
  std::size_t held = static_cast<std::size_t>(
      std::llround(data.heldout_fraction * static_cast<double>(all.size())));
  held = std::clamp<std::size_t>(held, 1, all.size());
  if (all.size() == 1) {
    ds.train = all;
    ds.heldout = all;
    return ds;
  }
  held = std::min(held, all.size() - 1);
  ds.heldout.assign(all.end() - static_cast<std::ptrdiff_t>(held), all.end());
  all.resize(all.size() - held);
  ds.train = std::move(all);
  return ds;
}

ModelConfig MakeModel(const ModelOptions& m, const HeadAssignment& assignment,
                      std::size_t seq_len, std::size_t vocab) {
  ModelConfig c;
  c.layers = m.layers;
  c.hidden = m.hidden;
  c.heads = assignment.total_heads();
  c.blocks = assignment.num_blocks();
  c.assignment = assignment;
  c.seq_len = seq_len;
  c.vocab = vocab;
  c.dropout = m.dropout;
  c.attention_dropout = m.attention_dropout;
  c.tie_embeddings = m.tie_embeddings;
  c.Validate();
  return c;
}

TrainConfig MakeTrain(const OptimOptions& o, double mask_rate,
                      std::uint64_t seed) {
  TrainConfig t;
  t.batch_size = o.batch;
  t.max_steps = o.steps;
  t.seed = seed;
  t.mask_rate = mask_rate;
  t.adam.peak_lr = o.lr;
  t.adam.warmup_steps = o.warmup < 0 ? ProportionalWarmup(o.steps)
                                     : static_cast<std::size_t>(o.warmup);
  t.adam.total_steps = o.steps;
  t.adam.weight_decay = o.weight_decay;
  t.adam.clip_norm = o.clip;
  return t;
}

void PrintEval(std::ostream& out, const char* prefix, const EvalResult& r,
               std::size_t vocab) {
  out << prefix << "_loss " << Format("%.6f", r.mean_loss) << "\n"
      << prefix << "_perplexity " << Format("%.6f", r.perplexity) << "\n"
      << "masked_positions " << r.masked_positions << "\n"
      << "uniform_perplexity " << vocab << "\n";
}

fs::path VocabPath(const fs::path& dir) { return dir / "vocab.txt"; }

Vocab LoadVocabFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocab file '" + path + "'");
  return Vocab::Load(in);
}

}  // namespace

int RunMask(const MaskOptions& o, std::ostream& out) {
  Mask mask;
  if (o.sparse_fixed) {
    mask = BuildSparseFixedMask({o.seq_len, o.stride, o.expressivity});
  } else {
    const std::size_t blocks_hint = o.blocks ? o.blocks : 1;
    const Permutation perm = o.perm.empty() ? Permutation::Identity(blocks_hint)
                                            : Permutation::Parse(o.perm);
    const std::size_t blocks = o.blocks ? o.blocks : perm.size();
    if (perm.size() != blocks) {
      throw ArgumentError("permutation has " + std::to_string(perm.size()) +
                          " entries but --blocks is " + std::to_string(blocks));
    }
    mask = BuildBlockMask({o.seq_len, blocks, perm});
  }
  if (o.format != "csv" && o.format != "pbm") {
    throw ArgumentError("unknown mask format '" + o.format + "'");
  }
  if (!o.out.empty()) {
    std::ofstream os = OpenOutput(o.out);
    if (o.format == "csv") {
      WriteMaskCsv(os, mask);
    } else {
      WriteMaskPbm(os, mask);
    }
  }
  out << "size " << mask.rows() << "x" << mask.cols() << "\n"
      << "nonzeros " << mask.CountSet() << "\n"
      << "density " << Format("%.6f", MaskDensity(mask)) << "\n";
  return kExitOk;
}

int RunEquiv(const EquivOptions& o, std::ostream& out) {
  if (o.blocks == 0 || o.seq_len % o.blocks != 0) {
    throw ArgumentError("--blocks " + std::to_string(o.blocks) +
                        " must divide --seq-len " + std::to_string(o.seq_len));
  }
  Rng rng(MixSeed(o.seed, 8));
  double worst = 0.0;
  for (std::size_t trial = 0; trial < o.trials; ++trial) {
    const Permutation perm = RandomPermutation(o.blocks, rng);
    const Tensor q = RandomNormal({o.seq_len, o.head_dim}, rng);
    const Tensor k = RandomNormal({o.seq_len, o.head_dim}, rng);
    const Tensor v = RandomNormal({o.seq_len, o.head_dim}, rng);
    Tensor blockwise = BlockwiseAttention(q, k, v, o.blocks, perm);
    if (o.corrupt) blockwise.values()[trial % blockwise.size()] += 1e-8;
    const Tensor dense =
        MaskedAttention(q, k, v, BuildBlockMask({o.seq_len, o.blocks, perm}));
    worst = std::max(worst, MaxAbsDiff(blockwise, dense));
  }
  const bool pass = worst <= o.tolerance;
  out << "trials " << o.trials << "\n"
      << "max_abs_deviation " << Format("%.3e", worst) << "\n"
      << "tolerance " << Format("%.1e", o.tolerance) << "\n"
      << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitOk : kExitFailure;
}

int RunBench(const BenchOptions& o, std::ostream& out) {
  std::optional<std::ofstream> file;
  if (!o.csv.empty()) file = OpenOutput(o.csv);
  std::ostream& csv = file ? *file : out;
  csv << "N,n,padded_N,batch,heads,head_dim,status,forward_ms,backward_ms,"
         "peak_act_bytes,score_bytes,attention_flops\n";
  const std::size_t repeat = std::max<std::size_t>(o.repeat, 1);
  for (std::size_t seq_len : o.seq_lens) {
    for (std::size_t n : o.blocks) {
      if (n == 0) throw ArgumentError("--blocks entries must be positive");
      const std::size_t padded = RoundUp(seq_len, n);
      const std::size_t slices = o.batch * o.heads;
      const Permutation perm =
          n > 1 ? Permutation::Shift(n, 1) : Permutation::Identity(1);
      std::vector<std::uint8_t> key_valid;
      if (padded != seq_len) {
        key_valid.assign(padded, 1);
        std::fill(key_valid.begin() + static_cast<std::ptrdiff_t>(seq_len),
                  key_valid.end(), 0);
      }
      BlockwiseOptions options;
      options.key_valid = key_valid;
      const std::uint64_t flops =
          AttentionFlops(padded, o.head_dim, o.heads, 1, n) * o.batch;
      csv << seq_len << "," << n << "," << padded << "," << o.batch << ","
          << o.heads << "," << o.head_dim << ",";
      double forward_ms = 0.0, backward_ms = 0.0;
      std::size_t score_bytes = 0;
      ActivationProfile profile;
      try {
        ScopedTrackingSession session(
            o.budget ? std::optional<std::size_t>(o.budget) : std::nullopt);
        Rng rng(MixSeed(o.seed, 9, padded * 131 + n));
        std::vector<Tensor> q, k, v, up;
        for (std::size_t s = 0; s < slices; ++s) {
          q.push_back(RandomNormal({padded, o.head_dim}, rng));
          k.push_back(RandomNormal({padded, o.head_dim}, rng));
          v.push_back(RandomNormal({padded, o.head_dim}, rng));
          if (o.backward) up.push_back(RandomNormal({padded, o.head_dim}, rng));
        }
        profile = ProfileActivation([&] {
          for (std::size_t r = 0; r < repeat; ++r) {
            std::vector<BlockwiseCache> caches(slices);
            std::vector<Tensor> outs;
            outs.reserve(slices);
            const auto t0 = std::chrono::steady_clock::now();
            for (std::size_t s = 0; s < slices; ++s) {
              outs.push_back(BlockwiseAttention(q[s], k[s], v[s], n, perm,
                                                options, &caches[s]));
            }
            const auto t1 = std::chrono::steady_clock::now();
            forward_ms += Millis(t1 - t0);
            if (r == 0) {
              for (const auto& c : caches)
                for (const auto& p : c.probs) score_bytes += p.bytes();
            }
            if (o.backward) {
              for (std::size_t s = 0; s < slices; ++s) {
                (void)BlockwiseAttentionBackward(q[s], k[s], v[s], n, perm,
                                                 up[s], caches[s]);
              }
              backward_ms += Millis(std::chrono::steady_clock::now() - t1);
            }
          }
        });
      } catch (const OutOfMemoryError&) {
        csv << "OOM,,,,," << flops << "\n";
        continue;
      }
      csv << "ok," << Format("%.3f", forward_ms / repeat) << ","
          << (o.backward ? Format("%.3f", backward_ms / repeat) : "") << ","
          << profile.activation_bytes << "," << score_bytes << ","
          << flops << "\n";
    }
  }
  return kExitOk;
}

int RunRegress(const RegressOptions& o, std::ostream& out) {
  if (o.seq_lens.size() < 3) {
    throw ArgumentError("--seq-lens needs at least 3 values");
  }
  for (std::size_t n_len : o.seq_lens) {
    if (n_len == 0 || o.tokens_per_batch % n_len != 0) {
      throw ArgumentError("N=" + std::to_string(n_len) +
                          " does not divide --tokens-per-batch " +
                          std::to_string(o.tokens_per_batch));
    }
  }
  int status = kExitOk;
  std::vector<std::pair<std::size_t, RegressionFit>> fits;
  if (!o.synthetic.empty()) {
    if (o.synthetic.size() != 3) {
      throw ArgumentError("--synthetic takes a2,a1,a0");
    }
    const double a2 = o.synthetic[0], a1 = o.synthetic[1], a0 = o.synthetic[2];
    const RegressionFit fit = RegressActivation(SyntheticRegressionPoints(
        a2, a1, a0, o.tokens_per_batch, o.seq_lens));
    const double c = static_cast<double>(o.tokens_per_batch);
    const double want_linear = c * a1 + a0;
    auto rel = [](double got, double want) {
      return std::abs(got - want) / std::max(std::abs(want), 1e-300);
    };
    const double err = std::max(rel(fit.a2, a2), rel(fit.linear_term, want_linear));
    out << "synthetic a2 " << Format("%.12g", fit.a2) << " injected "
        << Format("%.12g", a2) << "\n"
        << "synthetic linear_term " << Format("%.12g", fit.linear_term)
        << " injected " << Format("%.12g", want_linear) << "\n"
        << "max_relative_error " << Format("%.3e", err) << "\n"
        << (err <= 1e-9 ? "PASS" : "FAIL") << "\n";
    if (err > 1e-9) status = kExitFailure;
    fits.emplace_back(1, fit);
  } else {
    out << "n,slope,linear_term,a2,r_squared\n";
    for (std::size_t n : o.blocks) {
      ModelConfig c;
      c.layers = o.layers;
      c.hidden = o.hidden;
      c.heads = o.heads;
      c.vocab = o.vocab;
      c.blocks = n;
      c.assignment = HeadAssignment::AllIdentity(o.heads, n);
      c.dropout = o.dropout;
      c.attention_dropout = o.dropout;
      ScopedTrackingSession session;
      const RegressionFit fit = RegressActivation(
          MeasureActivationPoints(c, o.tokens_per_batch, o.seq_lens, o.seed));
      out << n << "," << Format("%.10g", fit.slope) << ","
          << Format("%.10g", fit.linear_term) << "," << Format("%.10g", fit.a2)
          << "," << Format("%.6f", fit.r_squared) << "\n";
      fits.emplace_back(n, fit);
    }
    for (std::size_t i = 1; i < fits.size(); ++i) {
      out << "slope_ratio n=" << fits[0].first << "/n=" << fits[i].first << " "
          << Format("%.4f", fits[0].second.slope / fits[i].second.slope) << "\n";
    }
  }
  // The table starts from the dense-equivalent line of the first fit.
  constexpr double kMiB = 1024.0 * 1024.0;
  RegressionFit dense = fits[0].second;
  dense.slope *= static_cast<double>(fits[0].first) / kMiB;
  dense.linear_term /= kMiB;
  const auto rows = ReductionTable(dense, o.seq_lens, o.table_blocks);
  PrintReductionTable(out, rows, "MiB");
  if (!o.csv.empty()) {
    std::ofstream os = OpenOutput(o.csv);
    WriteReductionCsv(os, o.synthetic.empty() ? "toy" : "synthetic", rows);
  }
  return status;
}

int RunTrain(const TrainOptions& o, std::ostream& out) {
  ModelConfig model;
  TrainState state;
  std::optional<Vocab> resumed_vocab;
  if (!o.resume.empty()) {
    Checkpoint ck = LoadCheckpoint(o.resume);
    model = ck.config;
    AdamState adam;
    if (ck.adam) {
      adam = *ck.adam;
    } else {
      std::vector<const Tensor*> views;
      for (const auto& n : std::as_const(ck.params).List()) views.push_back(n.tensor);
      adam = MakeAdamState(views);
    }
    state = TrainState{std::move(ck.params), std::move(adam)};
    if (!o.data.corpus.empty()) {
      resumed_vocab = LoadVocabFile(
          VocabPath(fs::path(o.resume).parent_path()).string());
    }
  }
  const HeadAssignment assignment = o.resume.empty()
                                        ? HeadAssignment::Parse(o.model.assignment)
                                        : model.assignment;
  const Dataset ds = LoadDataset(
      o.data, o.resume.empty() ? o.model.seq_len : model.seq_len,
      o.resume.empty() ? o.model.vocab : model.vocab, assignment.num_blocks(),
      o.seed, resumed_vocab ? &*resumed_vocab : nullptr, false);
  if (o.resume.empty()) {
    model = MakeModel(o.model, assignment, ds.seq_len, ds.vocab);
    state = InitTrainState(model, o.seed);
  }
  TrainConfig train = MakeTrain(o.optim, o.data.mask_rate, o.seed);
  train.checkpoint_interval = o.checkpoint_interval;
  train.checkpoint_dir = o.checkpoint_dir;
  if (!o.checkpoint_dir.empty()) {
    fs::create_directories(o.checkpoint_dir);
    if (ds.vocab_table) {
      std::ofstream os = OpenOutput(VocabPath(o.checkpoint_dir).string());
      ds.vocab_table->Save(os);
    }
  }
  std::optional<std::ofstream> file;
  if (!o.log.empty()) file = OpenOutput(o.log);
  std::ostream& log = file ? *file : out;
  const std::vector<LogRow> rows = TrainLoop(state, ds.train, model, train, &log);
  if (!o.checkpoint_dir.empty() &&
      (o.checkpoint_interval == 0 || state.adam.step % o.checkpoint_interval != 0)) {
    SaveCheckpoint((fs::path(o.checkpoint_dir) /
                    ("ckpt-" + std::to_string(state.adam.step) + ".bblk"))
                       .string(),
                   Checkpoint{model, state.params, o.seed, state.adam});
  }
  if (!rows.empty()) out << "final_loss " << Format("%.6f", rows.back().loss) << "\n";
  PrintEval(out, "validation",
            EvaluateMlm(state.params, model, ds.heldout, o.data.mask_rate, o.seed),
            model.vocab);
  return kExitOk;
}

int RunEval(const EvalOptions& o, std::ostream& out) {
  const Checkpoint ck = LoadCheckpoint(o.checkpoint);
  std::optional<Vocab> vocab;
  if (!o.data.corpus.empty()) {
    vocab = LoadVocabFile(
        o.vocab_file.empty()
            ? VocabPath(fs::path(o.checkpoint).parent_path()).string()
            : o.vocab_file);
  }
  const Dataset ds =
      LoadDataset(o.data, ck.config.seq_len, ck.config.vocab, ck.config.blocks,
                  o.seed, vocab ? &*vocab : nullptr, true);
  PrintEval(out, "eval",
            EvaluateMlm(ck.params, ck.config, ds.heldout, o.data.mask_rate,
                        o.seed, o.batch),
            ck.config.vocab);
  return kExitOk;
}

int RunAblate(const AblateOptions& o, std::ostream& out) {
  const HeadAssignment identity = HeadAssignment::AllIdentity(o.heads, o.blocks);
  const Dataset ds = LoadDataset(o.data, o.model.seq_len, o.model.vocab,
                                 o.blocks, o.seed, nullptr, false);
  const ModelConfig base = MakeModel(o.model, identity, ds.seq_len, ds.vocab);
  const TrainConfig train = MakeTrain(o.optim, o.data.mask_rate, o.seed);
  const std::vector<AblationRow> rows =
      RunAblation(base, train, ds.train, ds.heldout);
  std::optional<std::ofstream> file;
  if (!o.csv.empty()) file = OpenOutput(o.csv);
  std::ostream& csv = file ? *file : out;
  csv << "assignment,final_train_loss,validation_loss,best\n";
  for (const auto& r : rows) {
    csv << r.assignment.ToString() << "," << Format("%.17g", r.final_train_loss)
        << "," << Format("%.17g", r.validation_loss) << "," << (r.best ? 1 : 0)
        << "\n";
  }
  for (const auto& r : rows) {
    if (r.best) out << "best " << r.assignment.ToString() << "\n";
  }
  return kExitOk;
}

}  // namespace blockbert::cli
