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

#ifndef BLOCKBERT_CORE_ENCODER_H_
#define BLOCKBERT_CORE_ENCODER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "blockbert/attention.h"
#include "blockbert/masking.h"
#include "blockbert/numerics.h"
#include "blockbert/random.h"
#include "blockbert/tensor.h"

namespace blockbert {

// Toy BERT shape. Defaults are the desk-scale preset: L=2, H=64, A=4,
// N=128, V=1024, 4H feed-forward units.
struct ModelConfig {
  std::size_t layers = 2;
  std::size_t hidden = 64;
  std::size_t heads = 4;
  std::size_t seq_len = 128;
  std::size_t blocks = 1;
  std::size_t vocab = 1024;
  std::size_t ffn_hidden = 0;  // 0 selects 4 * hidden
  // counts() must sum to `heads` and have `blocks` entries.
  HeadAssignment assignment = HeadAssignment::AllIdentity(4, 1);
  double dropout = 0.1;
  double attention_dropout = 0.1;
  bool tie_embeddings = false;
  double layer_norm_eps = 1e-12;
  // Evaluate attention heads through the N x N masked path (audit mode).
  bool dense_reference_attention = false;

  std::size_t ffn() const { return ffn_hidden ? ffn_hidden : 4 * hidden; }
  std::size_t head_dim() const { return hidden / heads; }
  // Throws ArgumentError on inconsistent fields.
  void Validate() const;
};

struct LayerParams {
  MultiHeadParams attention;
  Tensor attention_bias;  // [H], added after W^O
  Tensor ln1_gamma, ln1_beta;
  Tensor ffn_w1, ffn_b1;  // [H x 4H], [4H]
  Tensor ffn_w2, ffn_b2;  // [4H x H], [H]
  Tensor ln2_gamma, ln2_beta;
};

// Parameters in declaration order (the checkpoint order): embeddings,
// embedding layer norm, layers, MLM head. mlm_weight is empty when the head
// is tied to the token embeddings.
struct ModelParams {
  Tensor token_embedding;     // [V x H]
  Tensor position_embedding;  // [N x H]
  Tensor embedding_ln_gamma, embedding_ln_beta;
  std::vector<LayerParams> layers;
  Tensor mlm_weight;  // [H x V]
  Tensor mlm_bias;    // [V]

  // Zero tensors of the right shapes (gradient accumulators).
  static ModelParams Zeros(const ModelConfig& config);
  // N(0, 0.02) weights, unit layer-norm gains, zero biases.
  static ModelParams Initialize(const ModelConfig& config, std::uint64_t seed);

  struct Named {
    std::string name;
    Tensor* tensor;
  };
  struct NamedConst {
    std::string name;
    const Tensor* tensor;
  };
  std::vector<Named> List();
  std::vector<NamedConst> List() const;
  std::size_t ParameterCount() const;
};

// Per-layer activations needed by the backward pass.
struct LayerCache {
  Tensor input;                          // [B*N x H]
  std::vector<MultiHeadCache> attention;  // one per sequence
  Tensor attention_dropout_scale;        // hidden dropout after attention
  LayerNormCache ln1;
  Tensor ln1_out;
  Tensor ffn_pre;  // [B*N x 4H] before GELU
  Tensor ffn_act;
  Tensor ffn_dropout_scale;
  LayerNormCache ln2;
};

struct ForwardCache {
  std::size_t batch = 0;
  std::vector<int> tokens;
  std::vector<std::uint8_t> key_valid;
  LayerNormCache embedding_ln;
  Tensor embedding_dropout_scale;
  std::vector<LayerCache> layers;
  Tensor final_hidden;  // [B*N x H]
};

// Runtime inputs shared by a forward call.
struct ForwardOptions {
  bool train = false;
  // Required for dropout in train mode; dropout is skipped when null.
  Rng* rng = nullptr;
  // [B*N], 0 at padding. Empty means every key is valid.
  std::span<const std::uint8_t> key_valid;
};

// One post-layernorm encoder layer on [B x N x H]:
// LN(x + Dropout(MHA(x))) then LN(h + Dropout(FFN(h))), FFN = W2 GELU(W1 h).
// Throws DivergenceError naming `layer_index` on non-finite activations.
Tensor EncoderLayerForward(const Tensor& x, const LayerParams& params,
                           const ModelConfig& config,
                           const ForwardOptions& options,
                           std::size_t layer_index, LayerCache* cache);

// Gradients of one layer; weight gradients are added into `grads`.
Tensor EncoderLayerBackward(const Tensor& upstream, const LayerParams& params,
                            const ModelConfig& config, const LayerCache& cache,
                            LayerParams& grads);

// tokens is row-major [batch x N]; returns logits [batch x N x V].
Tensor ModelForward(std::span<const int> tokens, std::size_t batch,
                    const ModelParams& params, const ModelConfig& config,
                    const ForwardOptions& options,
                    ForwardCache* cache = nullptr);

struct LossAndGrad {
  double loss = 0.0;
  Tensor dlogits;
  std::size_t count = 0;
};

// Mean cross-entropy over positions with loss_mask set. Throws ArgumentError
// when no position is selected.
double MlmLoss(const Tensor& logits, std::span<const int> targets,
               std::span<const std::uint8_t> loss_mask);
LossAndGrad MlmLossWithGrad(const Tensor& logits, std::span<const int> targets,
                            std::span<const std::uint8_t> loss_mask);

// Exact gradients for every parameter given dL/dlogits.
ModelParams ModelBackward(const ModelParams& params, const ModelConfig& config,
                          const ForwardCache& cache, const Tensor& dlogits);

}  // namespace blockbert

#endif  // BLOCKBERT_CORE_ENCODER_H_
