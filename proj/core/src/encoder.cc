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

#include "blockbert/encoder.h"

#include <cmath>
#include <string>

#include "blockbert/errors.h"

namespace blockbert {
namespace {

constexpr double kInitStd = 0.02;

Tensor RandomNormal(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = stddev * StandardNormal(rng);
  return t;
}

// Inverted-dropout multipliers: 0 with probability p, else 1 / (1 - p).
Tensor DropoutScale(const Shape& shape, double p, Rng& rng) {
  Tensor scale(shape);
  const double kept = 1.0 / (1.0 - p);
  for (double& v : scale.values()) v = Uniform01(rng) < p ? 0.0 : kept;
  return scale;
}

void MultiplyInPlace(Tensor& a, const Tensor& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
}

bool UseDropout(const ForwardOptions& options, double p) {
  return options.train && options.rng != nullptr && p > 0.0;
}

void CheckFinite(const Tensor& t, const std::string& where) {
  if (!AllFinite(t)) throw DivergenceError("non-finite activation in " + where);
}

}  // namespace

void ModelConfig::Validate() const {
  if (layers == 0 || hidden == 0 || heads == 0 || seq_len == 0 || vocab == 0) {
    throw ArgumentError("model dimensions must be positive");
  }
  if (hidden % heads != 0) {
    throw ArgumentError("heads A=" + std::to_string(heads) +
                        " must divide hidden H=" + std::to_string(hidden));
  }
  if (blocks == 0 || seq_len % blocks != 0) {
    throw ArgumentError("blocks n=" + std::to_string(blocks) +
                        " must divide N=" + std::to_string(seq_len) +
                        " (pad sequences first)");
  }
  if (assignment.num_blocks() != blocks ||
      assignment.total_heads() != heads) {
    throw ArgumentError("head assignment " + assignment.ToString() +
                        " does not match A=" + std::to_string(heads) +
                        ", n=" + std::to_string(blocks));
  }
  if (!(dropout >= 0.0 && dropout < 1.0) ||
      !(attention_dropout >= 0.0 && attention_dropout < 1.0)) {
    throw ArgumentError("dropout rates must be in [0, 1)");
  }
  if (!(layer_norm_eps >= 0.0)) throw ArgumentError("layer_norm_eps must be >= 0");
}

ModelParams ModelParams::Zeros(const ModelConfig& config) {
  config.Validate();
  const std::size_t h = config.hidden, d = config.head_dim(), f = config.ffn();
  ModelParams p;
  p.token_embedding = Tensor({config.vocab, h});
  p.position_embedding = Tensor({config.seq_len, h});
  p.embedding_ln_gamma = Tensor({h});
  p.embedding_ln_beta = Tensor({h});
  p.layers.resize(config.layers);
  for (LayerParams& layer : p.layers) {
    layer.attention.heads.resize(config.heads);
    for (HeadParams& head : layer.attention.heads) {
      head.wq = Tensor({h, d});
      head.wk = Tensor({h, d});
      head.wv = Tensor({h, d});
    }
    layer.attention.wo = Tensor({h, h});
    layer.attention_bias = Tensor({h});
    layer.ln1_gamma = Tensor({h});
    layer.ln1_beta = Tensor({h});
    layer.ffn_w1 = Tensor({h, f});
    layer.ffn_b1 = Tensor({f});
    layer.ffn_w2 = Tensor({f, h});
    layer.ffn_b2 = Tensor({h});
    layer.ln2_gamma = Tensor({h});
    layer.ln2_beta = Tensor({h});
  }
  if (!config.tie_embeddings) p.mlm_weight = Tensor({h, config.vocab});
  p.mlm_bias = Tensor({config.vocab});
  return p;
}

ModelParams ModelParams::Initialize(const ModelConfig& config,
                                    std::uint64_t seed) {
  ModelParams p = Zeros(config);
  Rng rng(seed);
  for (const Named& named : p.List()) {
    Tensor& t = *named.tensor;
    if (named.name.find("gamma") != std::string::npos) {
      std::fill(t.values().begin(), t.values().end(), 1.0);
    } else if (t.rank() == 2) {
      t = RandomNormal(t.shape(), kInitStd, rng);
    }
  }
  return p;
}

std::vector<ModelParams::Named> ModelParams::List() {
  std::vector<Named> out;
  out.push_back({"token_embedding", &token_embedding});
  out.push_back({"position_embedding", &position_embedding});
  out.push_back({"embedding_ln_gamma", &embedding_ln_gamma});
  out.push_back({"embedding_ln_beta", &embedding_ln_beta});
  for (std::size_t l = 0; l < layers.size(); ++l) {
    LayerParams& layer = layers[l];
    const std::string prefix = "layers." + std::to_string(l) + ".";
    for (std::size_t h = 0; h < layer.attention.heads.size(); ++h) {
      HeadParams& head = layer.attention.heads[h];
      const std::string hp = prefix + "head" + std::to_string(h) + ".";
      out.push_back({hp + "wq", &head.wq});
      out.push_back({hp + "wk", &head.wk});
      out.push_back({hp + "wv", &head.wv});
    }
    out.push_back({prefix + "wo", &layer.attention.wo});
    out.push_back({prefix + "attention_bias", &layer.attention_bias});
    out.push_back({prefix + "ln1_gamma", &layer.ln1_gamma});
    out.push_back({prefix + "ln1_beta", &layer.ln1_beta});
    out.push_back({prefix + "ffn_w1", &layer.ffn_w1});
    out.push_back({prefix + "ffn_b1", &layer.ffn_b1});
    out.push_back({prefix + "ffn_w2", &layer.ffn_w2});
    out.push_back({prefix + "ffn_b2", &layer.ffn_b2});
    out.push_back({prefix + "ln2_gamma", &layer.ln2_gamma});
    out.push_back({prefix + "ln2_beta", &layer.ln2_beta});
  }
  if (!mlm_weight.empty()) out.push_back({"mlm_weight", &mlm_weight});
  out.push_back({"mlm_bias", &mlm_bias});
  return out;
}

std::vector<ModelParams::NamedConst> ModelParams::List() const {
  std::vector<NamedConst> out;
  for (const Named& n : const_cast<ModelParams*>(this)->List())
    out.push_back({n.name, n.tensor});
  return out;
}

std::size_t ModelParams::ParameterCount() const {
  std::size_t n = 0;
  for (const NamedConst& p : List()) n += p.tensor->size();
  return n;
}

Tensor EncoderLayerForward(const Tensor& x, const LayerParams& params,
                           const ModelConfig& config,
                           const ForwardOptions& options,
                           std::size_t layer_index, LayerCache* cache) {
  if (x.rank() != 3 || x.dim(2) != config.hidden) {
    throw DimensionError("encoder layer expects [B x N x " +
                         std::to_string(config.hidden) + "], got " +
                         ShapeToString(x.shape()));
  }
  const std::size_t batch = x.dim(0), len = x.dim(1), hidden = x.dim(2);
  const std::size_t rows = batch * len;
  if (!options.key_valid.empty() && options.key_valid.size() != rows) {
    throw DimensionError("key_valid must have B*N entries");
  }
  const std::string where = "encoder layer " + std::to_string(layer_index);
  Tensor flat = x.Reshaped({rows, hidden});

  Tensor attn({rows, hidden});
  if (cache) cache->attention.assign(batch, {});
  BlockwiseOptions mha;
  mha.dense_reference = config.dense_reference_attention;
  if (UseDropout(options, config.attention_dropout)) {
    mha.dropout = config.attention_dropout;
    mha.rng = options.rng;
  }
  for (std::size_t b = 0; b < batch; ++b) {
    if (!options.key_valid.empty())
      mha.key_valid = options.key_valid.subspan(b * len, len);
    const Tensor xb = SliceRows(flat, b * len, len);
    const Tensor out = BlockwiseMultiheadAttention(
        xb, params.attention, config.assignment, mha,
        cache ? &cache->attention[b] : nullptr);
    AssignRows(attn, b * len, out);
  }
  AddRowBroadcastInPlace(attn, params.attention_bias);
  Tensor attn_scale;
  if (UseDropout(options, config.dropout)) {
    attn_scale = DropoutScale(attn.shape(), config.dropout, *options.rng);
    MultiplyInPlace(attn, attn_scale);
  }
  AddInPlace(attn, flat);
  LayerNormCache ln1;
  Tensor ln1_out = LayerNorm(attn, params.ln1_gamma, params.ln1_beta,
                             config.layer_norm_eps, cache ? &ln1 : nullptr);
  attn = Tensor();

  Tensor pre = MatMul(ln1_out, params.ffn_w1);
  AddRowBroadcastInPlace(pre, params.ffn_b1);
  Tensor act = Gelu(pre);
  Tensor ffn = MatMul(act, params.ffn_w2);
  AddRowBroadcastInPlace(ffn, params.ffn_b2);
  Tensor ffn_scale;
  if (UseDropout(options, config.dropout)) {
    ffn_scale = DropoutScale(ffn.shape(), config.dropout, *options.rng);
    MultiplyInPlace(ffn, ffn_scale);
  }
  AddInPlace(ffn, ln1_out);
  LayerNormCache ln2;
  Tensor out = LayerNorm(ffn, params.ln2_gamma, params.ln2_beta,
                         config.layer_norm_eps, cache ? &ln2 : nullptr);
  CheckFinite(out, where);

  if (cache) {
    cache->input = std::move(flat);
    cache->attention_dropout_scale = std::move(attn_scale);
    cache->ln1 = std::move(ln1);
    cache->ln1_out = std::move(ln1_out);
    cache->ffn_pre = std::move(pre);
    cache->ffn_act = std::move(act);
    cache->ffn_dropout_scale = std::move(ffn_scale);
    cache->ln2 = std::move(ln2);
  }
  return std::move(out).Reshaped({batch, len, hidden});
}

Tensor EncoderLayerBackward(const Tensor& upstream, const LayerParams& params,
                            const ModelConfig& config, const LayerCache& cache,
                            LayerParams& grads) {
  (void)config;
  const std::size_t rows = cache.input.rows(), hidden = cache.input.cols();
  if (upstream.size() != rows * hidden) {
    throw DimensionError("encoder layer backward: upstream " +
                         ShapeToString(upstream.shape()) +
                         " does not match cached input " +
                         ShapeToString(cache.input.shape()));
  }
  const std::size_t batch = cache.attention.size();
  if (batch == 0 || rows % batch != 0) {
    throw ArgumentError("encoder layer backward: cache mismatch");
  }
  const std::size_t len = rows / batch;
  const Tensor up = upstream.Reshaped({rows, hidden});

  LayerNormGrads ln2 = LayerNormBackward(up, params.ln2_gamma, cache.ln2);
  AddInPlace(grads.ln2_gamma, ln2.dgamma);
  AddInPlace(grads.ln2_beta, ln2.dbeta);
  Tensor dffn = ln2.dx;
  if (!cache.ffn_dropout_scale.empty()) MultiplyInPlace(dffn, cache.ffn_dropout_scale);
  AddInPlace(grads.ffn_w2, MatMulTransposedA(cache.ffn_act, dffn));
  AddInPlace(grads.ffn_b2, SumRows(dffn));
  Tensor dpre = MatMulTransposedB(dffn, params.ffn_w2);
  dffn = Tensor();
  for (std::size_t i = 0; i < dpre.size(); ++i)
    dpre[i] *= GeluDerivative(cache.ffn_pre[i]);
  AddInPlace(grads.ffn_w1, MatMulTransposedA(cache.ln1_out, dpre));
  AddInPlace(grads.ffn_b1, SumRows(dpre));
  Tensor dln1 = std::move(ln2.dx);
  AddInPlace(dln1, MatMulTransposedB(dpre, params.ffn_w1));
  dpre = Tensor();

  LayerNormGrads ln1 = LayerNormBackward(dln1, params.ln1_gamma, cache.ln1);
  AddInPlace(grads.ln1_gamma, ln1.dgamma);
  AddInPlace(grads.ln1_beta, ln1.dbeta);
  Tensor dattn = ln1.dx;
  if (!cache.attention_dropout_scale.empty()) {
    MultiplyInPlace(dattn, cache.attention_dropout_scale);
  }
  AddInPlace(grads.attention_bias, SumRows(dattn));

  Tensor dx = std::move(ln1.dx);
  for (std::size_t b = 0; b < batch; ++b) {
    const MultiHeadGrads mh = BlockwiseMultiheadAttentionBackward(
        params.attention, cache.attention[b], SliceRows(dattn, b * len, len));
    for (std::size_t h = 0; h < mh.heads.size(); ++h) {
      AddInPlace(grads.attention.heads[h].wq, mh.heads[h].wq);
      AddInPlace(grads.attention.heads[h].wk, mh.heads[h].wk);
      AddInPlace(grads.attention.heads[h].wv, mh.heads[h].wv);
    }
    AddInPlace(grads.attention.wo, mh.dwo);
    for (std::size_t r = 0; r < len; ++r) {
      auto dst = dx.row(b * len + r);
      const auto src = mh.dx.row(r);
      for (std::size_t j = 0; j < hidden; ++j) dst[j] += src[j];
    }
  }
  return std::move(dx).Reshaped(upstream.shape());
}

Tensor ModelForward(std::span<const int> tokens, std::size_t batch,
                    const ModelParams& params, const ModelConfig& config,
                    const ForwardOptions& options, ForwardCache* cache) {
  config.Validate();
  const std::size_t len = config.seq_len, hidden = config.hidden;
  const std::size_t rows = batch * len;
  if (batch == 0 || tokens.size() != rows) {
    throw DimensionError("model_forward expects batch * N = " +
                         std::to_string(rows) + " token ids, got " +
                         std::to_string(tokens.size()));
  }
  Tensor emb({rows, hidden});
  for (std::size_t r = 0; r < rows; ++r) {
    const int id = tokens[r];
    if (id < 0 || static_cast<std::size_t>(id) >= config.vocab) {
      throw ArgumentError("token id " + std::to_string(id) +
                          " out of range for vocab size " +
                          std::to_string(config.vocab));
    }
    const auto tok = params.token_embedding.row(static_cast<std::size_t>(id));
    const auto pos = params.position_embedding.row(r % len);
    auto dst = emb.row(r);
    for (std::size_t j = 0; j < hidden; ++j) dst[j] = tok[j] + pos[j];
  }
  LayerNormCache emb_ln;
  Tensor h = LayerNorm(emb, params.embedding_ln_gamma, params.embedding_ln_beta,
                       config.layer_norm_eps, cache ? &emb_ln : nullptr);
  emb = Tensor();
  Tensor emb_scale;
  if (UseDropout(options, config.dropout)) {
    emb_scale = DropoutScale(h.shape(), config.dropout, *options.rng);
    MultiplyInPlace(h, emb_scale);
  }
  h = std::move(h).Reshaped({batch, len, hidden});
  if (cache) cache->layers.assign(config.layers, {});
  for (std::size_t l = 0; l < config.layers; ++l) {
    h = EncoderLayerForward(h, params.layers[l], config, options, l,
                            cache ? &cache->layers[l] : nullptr);
  }
  Tensor final_hidden = std::move(h).Reshaped({rows, hidden});
  Tensor logits = config.tie_embeddings
                      ? MatMulTransposedB(final_hidden, params.token_embedding)
                      : MatMul(final_hidden, params.mlm_weight);
  AddRowBroadcastInPlace(logits, params.mlm_bias);
  CheckFinite(logits, "MLM head");
  if (cache) {
    cache->batch = batch;
    cache->tokens.assign(tokens.begin(), tokens.end());
    cache->key_valid.assign(options.key_valid.begin(), options.key_valid.end());
    cache->embedding_ln = std::move(emb_ln);
    cache->embedding_dropout_scale = std::move(emb_scale);
    cache->final_hidden = std::move(final_hidden);
  }
  return std::move(logits).Reshaped({batch, len, config.vocab});
}

LossAndGrad MlmLossWithGrad(const Tensor& logits, std::span<const int> targets,
                            std::span<const std::uint8_t> loss_mask) {
  const std::size_t vocab = logits.inner();
  if (logits.outer() != targets.size() || targets.size() != loss_mask.size()) {
    throw DimensionError("mlm_loss: logits " + ShapeToString(logits.shape()) +
                         " vs " + std::to_string(targets.size()) + " targets");
  }
  std::size_t count = 0;
  for (std::uint8_t m : loss_mask) count += m ? 1 : 0;
  if (count == 0) throw ArgumentError("mlm_loss needs at least one masked position");
  LossAndGrad out{0.0, Tensor(logits.shape()), count};
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (!loss_mask[r]) continue;
    const int t = targets[r];
    if (t < 0 || static_cast<std::size_t>(t) >= vocab) {
      throw ArgumentError("target id " + std::to_string(t) + " out of range");
    }
    const auto row = logits.row(r);
    double max = row[0];
    for (double v : row) max = std::max(max, v);
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - max);
    const double log_sum = max + std::log(sum);
    out.loss += (log_sum - row[t]) * inv;
    auto g = out.dlogits.row(r);
    for (std::size_t j = 0; j < vocab; ++j)
      g[j] = std::exp(row[j] - log_sum) * inv;
    g[t] -= inv;
  }
  return out;
}

double MlmLoss(const Tensor& logits, std::span<const int> targets,
               std::span<const std::uint8_t> loss_mask) {
  return MlmLossWithGrad(logits, targets, loss_mask).loss;
}

ModelParams ModelBackward(const ModelParams& params, const ModelConfig& config,
                          const ForwardCache& cache, const Tensor& dlogits) {
  const std::size_t len = config.seq_len, hidden = config.hidden;
  const std::size_t rows = cache.batch * len;
  if (cache.layers.size() != config.layers || cache.final_hidden.empty() ||
      dlogits.size() != rows * config.vocab) {
    throw ArgumentError("model_backward: cache does not match this forward");
  }
  ModelParams grads = ModelParams::Zeros(config);
  const Tensor dl = dlogits.Reshaped({rows, config.vocab});
  grads.mlm_bias = SumRows(dl);
  Tensor dh;
  if (config.tie_embeddings) {
    AddInPlace(grads.token_embedding, MatMulTransposedA(dl, cache.final_hidden));
    dh = MatMul(dl, params.token_embedding);
  } else {
    grads.mlm_weight = MatMulTransposedA(cache.final_hidden, dl);
    dh = MatMulTransposedB(dl, params.mlm_weight);
  }
  for (std::size_t l = config.layers; l-- > 0;) {
    dh = EncoderLayerBackward(dh, params.layers[l], config, cache.layers[l],
                              grads.layers[l]);
  }
  if (!cache.embedding_dropout_scale.empty()) {
    MultiplyInPlace(dh, cache.embedding_dropout_scale);
  }
  const LayerNormGrads ln =
      LayerNormBackward(dh, params.embedding_ln_gamma, cache.embedding_ln);
  AddInPlace(grads.embedding_ln_gamma, ln.dgamma);
  AddInPlace(grads.embedding_ln_beta, ln.dbeta);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto src = ln.dx.row(r);
    auto tok = grads.token_embedding.row(static_cast<std::size_t>(cache.tokens[r]));
    auto pos = grads.position_embedding.row(r % len);
    for (std::size_t j = 0; j < hidden; ++j) {
      tok[j] += src[j];
      pos[j] += src[j];
    }
  }
  return grads;
}

}  // namespace blockbert
