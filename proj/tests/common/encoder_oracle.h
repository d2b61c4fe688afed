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

// Straight-line reimplementation of the encoder forward pass over nested
// vectors, one sequence at a time.

#ifndef BLOCKBERT_TESTS_COMMON_ENCODER_ORACLE_H_
#define BLOCKBERT_TESTS_COMMON_ENCODER_ORACLE_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "blockbert/encoder.h"
#include "blockbert/numerics.h"
#include "common/oracles.h"

namespace blockbert::testing {

inline std::vector<double> RowOf(const Tensor& t, std::size_t r) {
  return std::vector<double>(t.row(r).begin(), t.row(r).end());
}

inline Matrix Affine(const Matrix& x, const Tensor& w, const Tensor* bias) {
  Matrix y = NaiveMatMul(x, ToMatrix(w));
  if (bias)
    for (auto& row : y)
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += (*bias)[j];
  return y;
}

inline Matrix NormRows(const Matrix& x, const Tensor& gamma, const Tensor& beta,
                       double eps) {
  Matrix y;
  for (const auto& row : x) {
    std::vector<double> z = LayerNormOracle(row, eps);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = z[j] * gamma[j] + beta[j];
    y.push_back(std::move(z));
  }
  return y;
}

inline Matrix AddM(const Matrix& a, const Matrix& b) {
  Matrix c = a;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) c[i][j] += b[i][j];
  return c;
}

// One-based permutation for shift k over n blocks: b -> ((b - 1 + k) mod n) + 1.
inline std::vector<int> ShiftOneBased(std::size_t n, std::size_t k) {
  std::vector<int> p(n);
  for (std::size_t b = 0; b < n; ++b) p[b] = static_cast<int>((b + k) % n) + 1;
  return p;
}

// Logits [N x V] for one sequence, every step written out.
inline Matrix ReferenceLogits(const ModelParams& p, const ModelConfig& c,
                              const std::vector<int>& tokens,
                              const std::vector<std::uint8_t>& key_valid) {
  const std::size_t len = tokens.size(), h = c.hidden, heads = c.heads;
  const std::size_t d = h / heads, n = c.blocks;
  Matrix x(len, std::vector<double>(h));
  for (std::size_t i = 0; i < len; ++i)
    for (std::size_t j = 0; j < h; ++j)
      x[i][j] = p.token_embedding(tokens[i], j) + p.position_embedding(i, j);
  x = NormRows(x, p.embedding_ln_gamma, p.embedding_ln_beta, c.layer_norm_eps);

  std::vector<std::vector<int>> head_perms;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t count = 0; count < c.assignment.counts()[k]; ++count)
      head_perms.push_back(ShiftOneBased(n, k));

  for (const LayerParams& layer : p.layers) {
    Matrix concat(len, std::vector<double>(h, 0.0));
    for (std::size_t a = 0; a < heads; ++a) {
      BitMatrix mask = NaiveBlockMask(len, n, head_perms[a]);
      for (auto& row : mask)
        for (std::size_t j = 0; j < len; ++j)
          if (!key_valid.empty() && !key_valid[j]) row[j] = 0;
      const HeadParams& hp = layer.attention.heads[a];
      const Matrix out = NaiveMaskedAttention(Affine(x, hp.wq, nullptr),
                                              Affine(x, hp.wk, nullptr),
                                              Affine(x, hp.wv, nullptr), mask);
      for (std::size_t i = 0; i < len; ++i)
        for (std::size_t j = 0; j < d; ++j) concat[i][a * d + j] = out[i][j];
    }
    const Matrix attn = Affine(concat, layer.attention.wo, &layer.attention_bias);
    const Matrix h1 =
        NormRows(AddM(x, attn), layer.ln1_gamma, layer.ln1_beta, c.layer_norm_eps);
    Matrix f = Affine(h1, layer.ffn_w1, &layer.ffn_b1);
    for (auto& row : f)
      for (double& v : row) v = GeluOracle(v);
    f = Affine(f, layer.ffn_w2, &layer.ffn_b2);
    x = NormRows(AddM(h1, f), layer.ln2_gamma, layer.ln2_beta, c.layer_norm_eps);
  }
  Matrix logits;
  if (c.tie_embeddings) {
    logits = NaiveMatMul(x, ToMatrix(Transpose(p.token_embedding)));
  } else {
    logits = NaiveMatMul(x, ToMatrix(p.mlm_weight));
  }
  for (auto& row : logits)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += p.mlm_bias[j];
  return logits;
}

}  // namespace blockbert::testing

#endif  // BLOCKBERT_TESTS_COMMON_ENCODER_ORACLE_H_
