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

#ifndef BLOCKBERT_CORE_ATTENTION_H_
#define BLOCKBERT_CORE_ATTENTION_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "blockbert/masking.h"
#include "blockbert/tensor.h"

namespace blockbert {

struct AttentionConfig {
  std::size_t seq_len = 0;
  std::size_t num_heads = 1;
  std::size_t hidden = 0;
  std::size_t num_blocks = 1;

  std::size_t head_dim() const { return hidden / num_heads; }
  // A * d == H and n | N.
  void Validate() const;
};

// Dense scaled dot-product attention softmax(Q K^T / sqrt(d)) V with
// Q, K, V of shape [N x d]. The N x N score matrix is charged to
// MemoryCategory::kAttentionScores.
template <typename T>
BasicTensor<T> Attention(const BasicTensor<T>& q, const BasicTensor<T>& k,
                         const BasicTensor<T>& v);

// Dense attention where scores at mask zeros are replaced by -inf before the
// softmax. Throws DegenerateRowError if the mask has an all-zero row.
template <typename T>
BasicTensor<T> MaskedAttention(const BasicTensor<T>& q, const BasicTensor<T>& k,
                               const BasicTensor<T>& v, const Mask& mask);

struct BlockwiseOptions {
  // Keys at zero positions are excluded. A query whose permuted key block
  // holds no valid key yields a zero output row. Empty means all valid.
  std::span<const std::uint8_t> key_valid;
  // Attention-probability dropout; applied only when rng is non-null.
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;
  // Multi-head only: evaluate every head through MaskedAttention on the
  // N x N block mask instead of the blockwise kernel. Reference path for
  // audits; ignores dropout.
  bool dense_reference = false;
};

// What the backward pass needs from a forward call, one entry per query
// block, never more than the n score blocks of size (N/n)^2.
template <typename T>
struct BasicBlockwiseCache {
  std::vector<BasicTensor<T>> probs;
  // Inverted-dropout multipliers (0 or 1/(1-p)); empty without dropout.
  std::vector<BasicTensor<T>> dropout_scale;
};
using BlockwiseCache = BasicBlockwiseCache<double>;

// Query block i attends only to key/value block perm(i):
// out_i = softmax(Q_i K_perm(i)^T / sqrt(d)) V_perm(i). Only n score blocks
// of (N/n)^2 entries are ever allocated. N must be a multiple of n
// (PaddingRequiredError otherwise).
template <typename T>
BasicTensor<T> BlockwiseAttention(const BasicTensor<T>& q,
                                  const BasicTensor<T>& k,
                                  const BasicTensor<T>& v, std::size_t n,
                                  const Permutation& perm,
                                  const BlockwiseOptions& options = {},
                                  BasicBlockwiseCache<T>* cache = nullptr);

struct AttentionGrads {
  Tensor dq;
  Tensor dk;
  Tensor dv;
};

// Vector-Jacobian product of BlockwiseAttention, block-local. This overload
// recomputes the probabilities (no dropout, all keys valid).
AttentionGrads BlockwiseAttentionBackward(const Tensor& q, const Tensor& k,
                                          const Tensor& v, std::size_t n,
                                          const Permutation& perm,
                                          const Tensor& upstream);
// Uses the probabilities recorded by a forward call.
AttentionGrads BlockwiseAttentionBackward(const Tensor& q, const Tensor& k,
                                          const Tensor& v, std::size_t n,
                                          const Permutation& perm,
                                          const Tensor& upstream,
                                          const BlockwiseCache& cache);

// Backward of MaskedAttention through the full N x N matrices.
AttentionGrads MaskedAttentionBackward(const Tensor& q, const Tensor& k,
                                       const Tensor& v, const Mask& mask,
                                       const Tensor& upstream);

// Per-head projections W_i^Q, W_i^K, W_i^V, each [H x d].
struct HeadParams {
  Tensor wq;
  Tensor wk;
  Tensor wv;
};

struct MultiHeadParams {
  std::vector<HeadParams> heads;
  Tensor wo;  // [H x H]
};

struct MultiHeadCache {
  Tensor x;
  std::vector<Tensor> q, k, v;
  std::vector<BlockwiseCache> attention;
  Tensor concat;  // [N x H]
  std::vector<Permutation> perms;
  std::vector<std::uint8_t> key_valid;
  bool dense_reference = false;
};

struct MultiHeadGrads {
  Tensor dx;
  std::vector<HeadParams> heads;
  Tensor dwo;
};

// Concat(head_1, ..., head_A) W^O with head_i =
// BlockwiseAttention(X W_i^Q, X W_i^K, X W_i^V, n, perm_i). Head i uses the
// i-th entry of assignment.HeadPermutations(); n is assignment.num_blocks().
Tensor BlockwiseMultiheadAttention(const Tensor& x,
                                   const MultiHeadParams& params,
                                   const HeadAssignment& assignment,
                                   const BlockwiseOptions& options = {},
                                   MultiHeadCache* cache = nullptr);

MultiHeadGrads BlockwiseMultiheadAttentionBackward(
    const MultiHeadParams& params, const MultiHeadCache& cache,
    const Tensor& upstream);

}  // namespace blockbert

#endif  // BLOCKBERT_CORE_ATTENTION_H_
