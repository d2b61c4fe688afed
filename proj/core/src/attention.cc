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

#include "blockbert/attention.h"

#include <cmath>
#include <limits>
#include <string>

#include "blockbert/errors.h"
#include "blockbert/numerics.h"
#include "blockbert/random.h"
#include "kernels.h"

namespace blockbert {
namespace {

template <typename T>
void CheckQkv(const BasicTensor<T>& q, const BasicTensor<T>& k,
              const BasicTensor<T>& v) {
  if (q.rank() != 2 || k.shape() != q.shape() || v.shape() != q.shape()) {
    throw DimensionError("attention expects Q, K, V of equal shape [N x d], " +
                         std::string("got Q ") + ShapeToString(q.shape()) +
                         ", K " + ShapeToString(k.shape()) + ", V " +
                         ShapeToString(v.shape()));
  }
}

// scores = a[rows_a x d] * b[rows_b x d]^T * scale, written into `scores`.
template <typename T>
void ScaledScoresInto(const T* a, const T* b, std::size_t rows_a,
                      std::size_t rows_b, std::size_t d, T scale,
                      BasicTensor<T>& bt_scratch, BasicTensor<T>& scores) {
  kernels::TransposeInto(b, d, rows_b, d, bt_scratch.data());
  std::fill(scores.values().begin(), scores.values().end(), T(0));
  kernels::GemmAccumulate(a, d, bt_scratch.data(), rows_b, scores.data(),
                          rows_b, rows_a, d, rows_b);
  for (T& s : scores.values()) s *= scale;
}

// Softmax over rows restricted to valid columns; a row without any valid
// column becomes all zeros.
template <typename T>
void SoftmaxValidColumns(BasicTensor<T>& scores, std::span<const std::uint8_t> valid) {
  const std::size_t width = scores.inner();
  for (std::size_t r = 0; r < scores.outer(); ++r) {
    T* row = scores.data() + r * width;
    T max = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < width; ++j) {
      if (!valid.empty() && !valid[j]) row[j] = -std::numeric_limits<T>::infinity();
      max = std::max(max, row[j]);
    }
    if (max == -std::numeric_limits<T>::infinity()) {
      std::fill(row, row + width, T(0));
      continue;
    }
    T sum = 0;
    for (std::size_t j = 0; j < width; ++j) {
      row[j] = std::exp(row[j] - max);
      sum += row[j];
    }
    const T inv = T(1) / sum;
    for (std::size_t j = 0; j < width; ++j) row[j] *= inv;
  }
}

// P-gradient to S-gradient through a row softmax, in place:
// dS = P * (dP - rowsum(dP * P)).
void SoftmaxBackwardInPlace(const Tensor& probs, Tensor& grad) {
  const std::size_t width = probs.inner();
  for (std::size_t r = 0; r < probs.outer(); ++r) {
    const double* p = probs.data() + r * width;
    double* g = grad.data() + r * width;
    double dot = 0.0;
    for (std::size_t j = 0; j < width; ++j) dot += g[j] * p[j];
    for (std::size_t j = 0; j < width; ++j) g[j] = p[j] * (g[j] - dot);
  }
}

}  // namespace

void AttentionConfig::Validate() const {
  if (num_heads == 0 || hidden == 0 || hidden % num_heads != 0) {
    throw ArgumentError("hidden size " + std::to_string(hidden) +
                        " must be a positive multiple of heads " +
                        std::to_string(num_heads));
  }
  if (num_blocks == 0 || seq_len == 0 || seq_len % num_blocks != 0) {
    throw PaddingRequiredError("sequence length " + std::to_string(seq_len) +
                               " must be a multiple of blocks " +
                               std::to_string(num_blocks));
  }
}

template <typename T>
BasicTensor<T> Attention(const BasicTensor<T>& q, const BasicTensor<T>& k,
                         const BasicTensor<T>& v) {
  CheckQkv(q, k, v);
  const std::size_t n = q.rows(), d = q.cols();
  const T scale = T(1) / std::sqrt(static_cast<T>(d));
  BasicTensor<T> kt({d, n});
  BasicTensor<T> scores = [&] {
    ScopedMemoryCategory scope(MemoryCategory::kAttentionScores);
    return BasicTensor<T>({n, n});
  }();
  ScaledScoresInto(q.data(), k.data(), n, n, d, scale, kt, scores);
  SoftmaxRowsInPlace(scores);
  return MatMul(scores, v);
}

template <typename T>
BasicTensor<T> MaskedAttention(const BasicTensor<T>& q, const BasicTensor<T>& k,
                               const BasicTensor<T>& v, const Mask& mask) {
  CheckQkv(q, k, v);
  const std::size_t n = q.rows(), d = q.cols();
  if (mask.rows() != n || mask.cols() != n) {
    throw DimensionError("mask " + std::to_string(mask.rows()) + "x" +
                         std::to_string(mask.cols()) +
                         " does not match sequence length " + std::to_string(n));
  }
  if (mask.HasEmptyRow()) {
    throw DegenerateRowError("mask has an all-zero row");
  }
  const T scale = T(1) / std::sqrt(static_cast<T>(d));
  BasicTensor<T> kt({d, n});
  BasicTensor<T> scores = [&] {
    ScopedMemoryCategory scope(MemoryCategory::kAttentionScores);
    return BasicTensor<T>({n, n});
  }();
  ScaledScoresInto(q.data(), k.data(), n, n, d, scale, kt, scores);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!mask.Get(i, j)) scores(i, j) = -std::numeric_limits<T>::infinity();
  SoftmaxRowsInPlace(scores);
  return MatMul(scores, v);
}

template <typename T>
BasicTensor<T> BlockwiseAttention(const BasicTensor<T>& q,
                                  const BasicTensor<T>& k,
                                  const BasicTensor<T>& v, std::size_t n,
                                  const Permutation& perm,
                                  const BlockwiseOptions& options,
                                  BasicBlockwiseCache<T>* cache) {
  CheckQkv(q, k, v);
  const std::size_t len = q.rows(), d = q.cols();
  if (n == 0 || len % n != 0) {
    throw PaddingRequiredError("sequence length " + std::to_string(len) +
                               " is not a multiple of blocks " +
                               std::to_string(n) + "; pad the input first");
  }
  if (perm.size() != n) {
    throw ArgumentError("permutation over " + std::to_string(perm.size()) +
                        " blocks used with n=" + std::to_string(n));
  }
  if (!options.key_valid.empty() && options.key_valid.size() != len) {
    throw DimensionError("key_valid has " +
                         std::to_string(options.key_valid.size()) +
                         " entries for sequence length " + std::to_string(len));
  }
  const bool use_dropout = options.rng != nullptr && options.dropout > 0.0;
  if (use_dropout && !(options.dropout < 1.0)) {
    throw ArgumentError("attention dropout must be in [0, 1)");
  }
  const std::size_t bs = len / n;
  const T scale = T(1) / std::sqrt(static_cast<T>(d));
  BasicTensor<T> out({len, d});
  BasicTensor<T> kt({d, bs});
  if (cache) {
    cache->probs.clear();
    cache->dropout_scale.clear();
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = perm(i);
    BasicTensor<T> scores = [&] {
      ScopedMemoryCategory scope(MemoryCategory::kAttentionScores);
      return BasicTensor<T>({bs, bs});
    }();
    ScaledScoresInto(q.data() + i * bs * d, k.data() + j * bs * d, bs, bs, d,
                     scale, kt, scores);
    std::span<const std::uint8_t> valid;
    if (!options.key_valid.empty()) valid = options.key_valid.subspan(j * bs, bs);
    SoftmaxValidColumns(scores, valid);

    BasicTensor<T> keep_scale;
    if (use_dropout) {
      // Dropped probabilities go through a single-row buffer so score memory
      // stays at the cached blocks plus O(N / n).
      ScopedMemoryCategory scope(MemoryCategory::kAttentionScores);
      keep_scale = BasicTensor<T>({bs, bs});
      BasicTensor<T> dropped_row({bs});
      const T kept = static_cast<T>(1.0 / (1.0 - options.dropout));
      for (std::size_t r = 0; r < bs; ++r) {
        for (std::size_t e = 0; e < bs; ++e) {
          const std::size_t at = r * bs + e;
          keep_scale[at] = Uniform01(*options.rng) < options.dropout ? T(0) : kept;
          dropped_row[e] = scores[at] * keep_scale[at];
        }
        kernels::GemmAccumulate(dropped_row.data(), bs, v.data() + j * bs * d, d,
                                out.data() + (i * bs + r) * d, d, 1, bs, d);
      }
    } else {
      kernels::GemmAccumulate(scores.data(), bs, v.data() + j * bs * d, d,
                              out.data() + i * bs * d, d, bs, bs, d);
    }
    if (cache) {
      cache->probs.push_back(std::move(scores));
      if (use_dropout) cache->dropout_scale.push_back(std::move(keep_scale));
    }
  }
  return out;
}

template Tensor Attention(const Tensor&, const Tensor&, const Tensor&);
template TensorF Attention(const TensorF&, const TensorF&, const TensorF&);
template Tensor MaskedAttention(const Tensor&, const Tensor&, const Tensor&,
                                const Mask&);
template TensorF MaskedAttention(const TensorF&, const TensorF&,
                                 const TensorF&, const Mask&);
template Tensor BlockwiseAttention(const Tensor&, const Tensor&, const Tensor&,
                                   std::size_t, const Permutation&,
                                   const BlockwiseOptions&, BlockwiseCache*);
template TensorF BlockwiseAttention(const TensorF&, const TensorF&,
                                    const TensorF&, std::size_t,
                                    const Permutation&,
                                    const BlockwiseOptions&,
                                    BasicBlockwiseCache<float>*);

AttentionGrads BlockwiseAttentionBackward(const Tensor& q, const Tensor& k,
                                          const Tensor& v, std::size_t n,
                                          const Permutation& perm,
                                          const Tensor& upstream) {
  BlockwiseCache cache;
  BlockwiseAttention(q, k, v, n, perm, {}, &cache);
  return BlockwiseAttentionBackward(q, k, v, n, perm, upstream, cache);
}

AttentionGrads BlockwiseAttentionBackward(const Tensor& q, const Tensor& k,
                                          const Tensor& v, std::size_t n,
                                          const Permutation& perm,
                                          const Tensor& upstream,
                                          const BlockwiseCache& cache) {
  CheckQkv(q, k, v);
  if (upstream.shape() != q.shape()) {
    throw DimensionError("upstream gradient " +
                         ShapeToString(upstream.shape()) +
                         " does not match attention output " +
                         ShapeToString(q.shape()));
  }
  const std::size_t len = q.rows(), d = q.cols();
  if (n == 0 || len % n != 0) {
    throw PaddingRequiredError("sequence length " + std::to_string(len) +
                               " is not a multiple of blocks " +
                               std::to_string(n));
  }
  if (perm.size() != n || cache.probs.size() != n ||
      (!cache.dropout_scale.empty() && cache.dropout_scale.size() != n)) {
    throw ArgumentError("blockwise cache does not match n=" + std::to_string(n));
  }
  const bool use_dropout = !cache.dropout_scale.empty();
  const std::size_t bs = len / n;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  AttentionGrads g{Tensor({len, d}), Tensor({len, d}), Tensor({len, d})};
  Tensor vt({d, bs});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = perm(i);
    const Tensor& probs = cache.probs[i];
    const double* dout = upstream.data() + i * bs * d;

    ScopedMemoryCategory scope(MemoryCategory::kAttentionScores);
    Tensor used;
    if (use_dropout) {
      used = Tensor({bs, bs});
      for (std::size_t e = 0; e < used.size(); ++e)
        used[e] = probs[e] * cache.dropout_scale[i][e];
    }
    const Tensor& mixed = use_dropout ? used : probs;
    kernels::GemmTransposedAAccumulate(mixed.data(), bs, dout, d,
                                       g.dv.data() + j * bs * d, d, bs, bs, d);

    Tensor dprobs({bs, bs});
    kernels::TransposeInto(v.data() + j * bs * d, d, bs, d, vt.data());
    kernels::GemmAccumulate(dout, d, vt.data(), bs, dprobs.data(), bs, bs, d,
                            bs);
    if (use_dropout) {
      for (std::size_t e = 0; e < dprobs.size(); ++e)
        dprobs[e] *= cache.dropout_scale[i][e];
    }
    SoftmaxBackwardInPlace(probs, dprobs);
    for (double& x : dprobs.values()) x *= scale;
    kernels::GemmAccumulate(dprobs.data(), bs, k.data() + j * bs * d, d,
                            g.dq.data() + i * bs * d, d, bs, bs, d);
    kernels::GemmTransposedAAccumulate(dprobs.data(), bs,
                                       q.data() + i * bs * d, d,
                                       g.dk.data() + j * bs * d, d, bs, bs, d);
  }
  return g;
}

AttentionGrads MaskedAttentionBackward(const Tensor& q, const Tensor& k,
                                       const Tensor& v, const Mask& mask,
                                       const Tensor& upstream) {
  CheckQkv(q, k, v);
  const std::size_t n = q.rows(), d = q.cols();
  if (mask.rows() != n || mask.cols() != n || upstream.shape() != q.shape()) {
    throw DimensionError("masked attention backward shape mismatch");
  }
  if (mask.HasEmptyRow()) throw DegenerateRowError("mask has an all-zero row");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor probs = MatMulTransposedB(q, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      probs(i, j) = mask.Get(i, j) ? probs(i, j) * scale
                                   : -std::numeric_limits<double>::infinity();
  SoftmaxRowsInPlace(probs);
  AttentionGrads g;
  g.dv = MatMulTransposedA(probs, upstream);
  Tensor dscores = MatMulTransposedB(upstream, v);
  SoftmaxBackwardInPlace(probs, dscores);
  ScaleInPlace(dscores, scale);
  g.dq = MatMul(dscores, k);
  g.dk = MatMulTransposedA(dscores, q);
  return g;
}

namespace {

void CheckMultiHead(const Tensor& x, const MultiHeadParams& params,
                    const HeadAssignment& assignment) {
  if (x.rank() != 2) {
    throw DimensionError("multi-head attention expects X [N x H], got " +
                         ShapeToString(x.shape()));
  }
  const std::size_t hidden = x.cols();
  const std::size_t heads = params.heads.size();
  if (heads == 0 || assignment.total_heads() != heads) {
    throw ArgumentError("assignment " + assignment.ToString() + " covers " +
                        std::to_string(assignment.total_heads()) +
                        " heads but " + std::to_string(heads) +
                        " head parameter sets were given");
  }
  if (hidden % heads != 0) {
    throw DimensionError("hidden " + std::to_string(hidden) +
                         " is not divisible by " + std::to_string(heads) +
                         " heads");
  }
  const Shape head_shape{hidden, hidden / heads};
  for (const HeadParams& h : params.heads) {
    if (h.wq.shape() != head_shape || h.wk.shape() != head_shape ||
        h.wv.shape() != head_shape) {
      throw DimensionError("head projections must be " +
                           ShapeToString(head_shape));
    }
  }
  if (params.wo.shape() != Shape{hidden, hidden}) {
    throw DimensionError("output projection must be " +
                         ShapeToString({hidden, hidden}) + ", got " +
                         ShapeToString(params.wo.shape()));
  }
}

Mask ReferenceMask(std::size_t len, std::size_t n, const Permutation& perm,
                   std::span<const std::uint8_t> key_valid) {
  Mask mask = BuildBlockMask({len, n, perm});
  if (!key_valid.empty()) {
    for (std::size_t i = 0; i < len; ++i)
      for (std::size_t j = 0; j < len; ++j)
        if (!key_valid[j]) mask.Set(i, j, false);
  }
  return mask;
}

}  // namespace

Tensor BlockwiseMultiheadAttention(const Tensor& x,
                                   const MultiHeadParams& params,
                                   const HeadAssignment& assignment,
                                   const BlockwiseOptions& options,
                                   MultiHeadCache* cache) {
  CheckMultiHead(x, params, assignment);
  const std::size_t len = x.rows(), hidden = x.cols();
  const std::size_t heads = params.heads.size(), d = hidden / heads;
  const std::size_t n = assignment.num_blocks();
  std::vector<Permutation> perms = assignment.HeadPermutations();
  Tensor concat({len, hidden});
  if (cache) {
    cache->q.clear();
    cache->k.clear();
    cache->v.clear();
    cache->attention.assign(heads, {});
  }
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor q = MatMul(x, params.heads[h].wq);
    Tensor k = MatMul(x, params.heads[h].wk);
    Tensor v = MatMul(x, params.heads[h].wv);
    const Tensor head =
        options.dense_reference
            ? MaskedAttention(q, k, v,
                              ReferenceMask(len, n, perms[h], options.key_valid))
            : BlockwiseAttention(q, k, v, n, perms[h], options,
                                 cache ? &cache->attention[h] : nullptr);
    for (std::size_t r = 0; r < len; ++r)
      std::copy_n(head.data() + r * d, d, concat.data() + r * hidden + h * d);
    if (cache) {
      cache->q.push_back(std::move(q));
      cache->k.push_back(std::move(k));
      cache->v.push_back(std::move(v));
    }
  }
  Tensor out = MatMul(concat, params.wo);
  if (cache) {
    cache->x = x;
    cache->concat = std::move(concat);
    cache->perms = std::move(perms);
    cache->key_valid.assign(options.key_valid.begin(), options.key_valid.end());
    cache->dense_reference = options.dense_reference;
  }
  return out;
}

MultiHeadGrads BlockwiseMultiheadAttentionBackward(
    const MultiHeadParams& params, const MultiHeadCache& cache,
    const Tensor& upstream) {
  const std::size_t heads = params.heads.size();
  if (cache.q.size() != heads || cache.attention.size() != heads ||
      cache.perms.size() != heads) {
    throw ArgumentError("multi-head cache does not match parameters");
  }
  const std::size_t len = cache.x.rows(), hidden = cache.x.cols();
  const std::size_t d = hidden / heads;
  if (upstream.shape() != Shape{len, hidden}) {
    throw DimensionError("multi-head upstream " +
                         ShapeToString(upstream.shape()) + " expected " +
                         ShapeToString({len, hidden}));
  }
  const std::size_t n = cache.perms.front().size();
  MultiHeadGrads g;
  g.dwo = MatMulTransposedA(cache.concat, upstream);
  const Tensor dconcat = MatMulTransposedB(upstream, params.wo);
  g.dx = Tensor({len, hidden});
  g.heads.resize(heads);
  Tensor dhead({len, d});
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t r = 0; r < len; ++r)
      std::copy_n(dconcat.data() + r * hidden + h * d, d, dhead.data() + r * d);
    const AttentionGrads ag =
        cache.dense_reference
            ? MaskedAttentionBackward(
                  cache.q[h], cache.k[h], cache.v[h],
                  ReferenceMask(len, n, cache.perms[h], cache.key_valid), dhead)
            : BlockwiseAttentionBackward(cache.q[h], cache.k[h], cache.v[h], n,
                                         cache.perms[h], dhead,
                                         cache.attention[h]);
    g.heads[h].wq = MatMulTransposedA(cache.x, ag.dq);
    g.heads[h].wk = MatMulTransposedA(cache.x, ag.dk);
    g.heads[h].wv = MatMulTransposedA(cache.x, ag.dv);
    AddInPlace(g.dx, MatMulTransposedB(ag.dq, params.heads[h].wq));
    AddInPlace(g.dx, MatMulTransposedB(ag.dk, params.heads[h].wk));
    AddInPlace(g.dx, MatMulTransposedB(ag.dv, params.heads[h].wv));
  }
  return g;
}

}  // namespace blockbert
