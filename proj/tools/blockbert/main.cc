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

#include <cstdlib>
#include <iostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "blockbert/commands.h"
#include "blockbert/config_file.h"
#include "blockbert/errors.h"

namespace {

using namespace blockbert::cli;

void AddModelFlags(CLI::App* app, ModelOptions& m, bool with_assignment) {
  app->add_option("--layers", m.layers, "Encoder layers");
  app->add_option("--hidden", m.hidden, "Hidden size H");
  app->add_option("--seq-len", m.seq_len, "Sequence length N");
  app->add_option("--vocab", m.vocab, "Vocabulary size V (maximum for text)");
  if (with_assignment) {
    app->add_option("--assignment", m.assignment,
                    "Heads per shift permutation, e.g. 2:2");
  }
  app->add_option("--dropout", m.dropout, "Hidden dropout");
  app->add_option("--attention-dropout", m.attention_dropout,
                  "Attention-probability dropout");
  app->add_flag("--tie-embeddings", m.tie_embeddings,
                "Share the MLM output matrix with token embeddings");
}

void AddDataFlags(CLI::App* app, DataOptions& d) {
  app->add_option("--corpus", d.corpus,
                  "UTF-8 text, blank-line separated documents (default: "
                  "synthetic copy task)");
  app->add_option("--copy-sequences", d.copy_sequences,
                  "Copy-task training sequences");
  app->add_option("--heldout-sequences", d.heldout_sequences,
                  "Copy-task held-out sequences");
  app->add_option("--heldout-fraction", d.heldout_fraction,
                  "Share of corpus sequences held out");
  app->add_option("--mask-rate", d.mask_rate, "MLM selection rate");
}

void AddOptimFlags(CLI::App* app, OptimOptions& o) {
  app->add_option("--batch", o.batch, "Sequences per step");
  app->add_option("--steps", o.steps, "Optimizer steps");
  app->add_option("--lr", o.lr, "Peak learning rate");
  app->add_option("--warmup", o.warmup,
                  "Warmup steps (negative: proportional default)");
  app->add_option("--weight-decay", o.weight_decay, "Decoupled weight decay");
  app->add_option("--clip", o.clip, "Global gradient-norm clip (0 disables)");
}

// Pulls `--config FILE` out of the raw arguments after the subcommand.
std::string FindConfigPath(int argc, char** argv) {
  for (int i = 2; i < argc; ++i) {
    const std::string_view arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.starts_with("--config=")) return std::string(arg.substr(9));
  }
  return {};
}

// File values become option defaults, so flags given on the command line
// still win. Returns the keys that were set.
std::set<std::string> ApplyConfig(CLI::App* sub, const std::string& path) {
  std::set<std::string> keys;
  for (const ConfigEntry& e : ReadConfigFile(path)) {
    CLI::Option* opt = sub->get_option_no_throw("--" + e.key);
    if (opt == nullptr || e.key == "config" || e.key == "help") {
      throw blockbert::ArgumentError(path + ":" + std::to_string(e.line) +
                                     ": unknown key '" + e.key + "' for " +
                                     sub->get_name());
    }
    opt->default_val(e.value);
    opt->required(false)->force_callback();
    keys.insert(e.key);
  }
  return keys;
}

int Main(int argc, char** argv) {
  CLI::App app{"Blockwise attention toolkit"};
  app.require_subcommand(1);
  std::string config_path;

  MaskOptions mask;
  EquivOptions equiv;
  BenchOptions bench;
  RegressOptions regress;
  TrainOptions train;
  EvalOptions eval;
  AblateOptions ablate;

  std::vector<std::pair<CLI::App*, std::uint64_t*>> subs;
  auto add_sub = [&](const char* name, const char* help, std::uint64_t* seed_ref) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value defaults file");
    sub->add_option("--seed", *seed_ref, "Seed (fallback: BLOCKBERT_SEED)");
    subs.emplace_back(sub, seed_ref);
    return sub;
  };

  std::uint64_t mask_seed = 1;
  CLI::App* mask_cmd = add_sub("mask", "Write a block or sparse-fixed mask", &mask_seed);
  mask_cmd->add_option("--seq-len", mask.seq_len, "Sequence length N")->required();
  mask_cmd->add_option("--blocks", mask.blocks, "Block count n");
  mask_cmd->add_option("--perm", mask.perm, "One-based block permutation, e.g. 2,3,1");
  mask_cmd->add_flag("--sparse-fixed", mask.sparse_fixed, "Fixed sparse pattern");
  mask_cmd->add_option("--stride", mask.stride, "Sparse window length");
  mask_cmd->add_option("--expressivity", mask.expressivity, "Summary columns per window");
  mask_cmd->add_option("--out", mask.out, "Output file");
  mask_cmd->add_option("--format", mask.format, "csv or pbm")
      ->check(CLI::IsMember({"csv", "pbm"}));

  CLI::App* equiv_cmd = add_sub("equiv", "Audit blockwise against masked attention", &equiv.seed);
  equiv_cmd->add_option("--seq-len", equiv.seq_len, "Sequence length N");
  equiv_cmd->add_option("--blocks", equiv.blocks, "Block count n");
  equiv_cmd->add_option("--head-dim", equiv.head_dim, "Head dimension d");
  equiv_cmd->add_option("--trials", equiv.trials, "Random trials");
  equiv_cmd->add_option("--tolerance", equiv.tolerance, "Max absolute deviation");
  equiv_cmd->add_flag("--corrupt-for-self-test", equiv.corrupt)->group("");

  CLI::App* bench_cmd = add_sub("bench", "Time attention and measure its memory", &bench.seed);
  bench_cmd->add_option("--seq-lens", bench.seq_lens, "Sequence lengths")->delimiter(',');
  bench_cmd->add_option("--blocks", bench.blocks, "Block counts")->delimiter(',');
  bench_cmd->add_option("--batch", bench.batch, "Sequences");
  bench_cmd->add_option("--heads", bench.heads, "Heads");
  bench_cmd->add_option("--head-dim", bench.head_dim, "Head dimension d");
  bench_cmd->add_option("--repeat", bench.repeat, "Timed repetitions per row");
  bench_cmd->add_flag("--backward", bench.backward, "Also time the backward pass");
  bench_cmd->add_option("--budget", bench.budget,
                        "Live-byte budget; rows over it report OOM");
  bench_cmd->add_option("--csv", bench.csv, "CSV output file");

  CLI::App* regress_cmd = add_sub("regress", "Fit activation memory against N", &regress.seed);
  regress_cmd->add_option("--tokens-per-batch", regress.tokens_per_batch, "Fixed b*N");
  regress_cmd->add_option("--seq-lens", regress.seq_lens, "Sequence lengths")->delimiter(',');
  regress_cmd->add_option("--blocks", regress.blocks, "Block counts to fit")->delimiter(',');
  regress_cmd->add_option("--table-blocks", regress.table_blocks,
                          "Block counts in the reduction table")->delimiter(',');
  regress_cmd->add_option("--layers", regress.layers, "Encoder layers");
  regress_cmd->add_option("--hidden", regress.hidden, "Hidden size H");
  regress_cmd->add_option("--heads", regress.heads, "Heads");
  regress_cmd->add_option("--vocab", regress.vocab, "Vocabulary size");
  regress_cmd->add_option("--dropout", regress.dropout, "Dropout during profiling");
  regress_cmd->add_option("--synthetic", regress.synthetic,
                          "Fit exact points from a2,a1,a0 instead of measuring")
      ->delimiter(',');
  regress_cmd->add_option("--csv", regress.csv, "Reduction-table CSV file");

  CLI::App* train_cmd = add_sub("train", "Train the MLM encoder", &train.seed);
  AddModelFlags(train_cmd, train.model, true);
  AddDataFlags(train_cmd, train.data);
  AddOptimFlags(train_cmd, train.optim);
  train_cmd->add_option("--checkpoint-dir", train.checkpoint_dir, "Checkpoint directory");
  train_cmd->add_option("--checkpoint-interval", train.checkpoint_interval,
                        "Steps between checkpoints (0: final only)");
  train_cmd->add_option("--resume", train.resume, "Checkpoint to continue from");
  train_cmd->add_option("--log", train.log, "Training log CSV file");

  CLI::App* eval_cmd = add_sub("eval", "Evaluate a checkpoint", &eval.seed);
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  AddDataFlags(eval_cmd, eval.data);
  eval_cmd->add_option("--vocab-file", eval.vocab_file, "Vocabulary file");
  eval_cmd->add_option("--batch", eval.batch, "Sequences per forward");

  CLI::App* ablate_cmd = add_sub("ablate", "Sweep head assignments", &ablate.seed);
  AddModelFlags(ablate_cmd, ablate.model, false);
  AddDataFlags(ablate_cmd, ablate.data);
  AddOptimFlags(ablate_cmd, ablate.optim);
  ablate_cmd->add_option("--blocks", ablate.blocks, "Block count n");
  ablate_cmd->add_option("--heads", ablate.heads, "Heads A");
  ablate_cmd->add_option("--csv", ablate.csv, "CSV output file");

  std::set<std::string> config_keys;
  CLI::App* chosen = nullptr;
  if (argc >= 2) {
    for (auto& [sub, ref] : subs) {
      if (sub->get_name() == argv[1]) chosen = sub;
    }
  }
  try {
    const std::string path = FindConfigPath(argc, argv);
    if (chosen != nullptr && !path.empty()) config_keys = ApplyConfig(chosen, path);
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (auto& [sub, ref] : subs) {
    if (!sub->parsed()) continue;
    if (sub->get_option("--seed")->count() == 0 && !config_keys.contains("seed")) {
      if (const char* env = std::getenv("BLOCKBERT_SEED")) {
        try {
          std::size_t used = 0;
          *ref = std::stoull(env, &used);
          if (used != std::string_view(env).size()) throw std::invalid_argument(env);
        } catch (const std::exception&) {
          throw blockbert::ArgumentError(std::string("BLOCKBERT_SEED is not an "
                                                     "unsigned integer: ") + env);
        }
      }
    }
  }
  std::ostream& out = std::cout;
  if (mask_cmd->parsed()) return RunMask(mask, out);
  if (equiv_cmd->parsed()) return RunEquiv(equiv, out);
  if (bench_cmd->parsed()) return RunBench(bench, out);
  if (regress_cmd->parsed()) return RunRegress(regress, out);
  if (train_cmd->parsed()) return RunTrain(train, out);
  if (eval_cmd->parsed()) return RunEval(eval, out);
  if (ablate_cmd->parsed()) return RunAblate(ablate, out);
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return Main(argc, argv);
  } catch (const blockbert::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const blockbert::DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const blockbert::PaddingRequiredError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
