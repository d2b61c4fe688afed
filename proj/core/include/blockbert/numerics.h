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

#ifndef BLOCKBERT_CORE_NUMERICS_H_
#define BLOCKBERT_CORE_NUMERICS_H_

#include <functional>
#include <span>

#include "blockbert/tensor.h"

namespace blockbert {

// Matrix products. The left operand may have rank 1-3: every leading axis is
// folded into rows and preserved in the result, so a [B x N x H] activation
// times an [H x K] weight yields [B x N x K]. Each output element is reduced
// left to right over the shared axis, which makes results bit-reproducible.

template <typename T>
BasicTensor<T> MatMul(const BasicTensor<T>& a, const BasicTensor<T>& b);

// out = a * b, written into a preallocated [rows(a) x cols(b)] tensor.
template <typename T>
void MatMulInto(const BasicTensor<T>& a, const BasicTensor<T>& b,
                BasicTensor<T>& out);

// out = a * b^T for a: [m x k], b: [p x k]; out: [m x p].
template <typename T>
void MatMulTransposedBInto(const BasicTensor<T>& a, const BasicTensor<T>& b,
                           BasicTensor<T>& out);
template <typename T>
BasicTensor<T> MatMulTransposedB(const BasicTensor<T>& a,
                                 const BasicTensor<T>& b);

// a^T * b for a: [k x m], b: [k x p]; result [m x p]. Leading axes of both
// operands are folded into k, so this is the weight-gradient product.
template <typename T>
BasicTensor<T> MatMulTransposedA(const BasicTensor<T>& a,
                                 const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> Transpose(const BasicTensor<T>& a);

// Row-wise softmax over the trailing axis with max subtraction. Entries equal
// to -inf receive exactly zero weight. Throws DegenerateRowError when a row
// has no finite entry.
template <typename T>
BasicTensor<T> SoftmaxRows(const BasicTensor<T>& x);
template <typename T>
void SoftmaxRowsInPlace(BasicTensor<T>& x);

// Per-position statistics kept by LayerNormForward for the backward pass.
struct LayerNormCache {
  Tensor normalized;  // (x - mean) * inv_std, same shape as x
  Tensor inv_std;     // [outer]
};

// Normalizes over the trailing axis and applies gamma/beta.
// eps must be >= 0; a zero-variance row with eps == 0 is an ArgumentError.
Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps, LayerNormCache* cache = nullptr);

struct LayerNormGrads {
  Tensor dx;
  Tensor dgamma;
  Tensor dbeta;
};
LayerNormGrads LayerNormBackward(const Tensor& upstream, const Tensor& gamma,
                                 const LayerNormCache& cache);

// Tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
double Gelu(double x);
double GeluDerivative(double x);
Tensor Gelu(const Tensor& x);

// Elementwise helpers.
Tensor Add(const Tensor& a, const Tensor& b);
void AddInPlace(Tensor& a, const Tensor& b);
void ScaleInPlace(Tensor& a, double factor);
// Adds a [inner] bias to every row.
void AddRowBroadcastInPlace(Tensor& a, const Tensor& bias);
// Sum over every leading axis, result [inner]. Bias gradients.
Tensor SumRows(const Tensor& a);
double MaxAbsDiff(const Tensor& a, const Tensor& b);
bool AllFinite(const Tensor& a);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_sum_squares = 0.0;
};

// Ordinary least squares y = slope * x + intercept. Needs at least two
// distinct xs; otherwise SingularDesignError.
LineFit OlsLineFit(std::span<const double> xs, std::span<const double> ys);
// Coefficient of determination of `fit` on the same points.
double RSquared(std::span<const double> xs, std::span<const double> ys,
                const LineFit& fit);

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h, coordinate by
// coordinate. Throws OracleError on a non-finite evaluation.
Tensor FiniteDiffGrad(const std::function<double(const Tensor&)>& f,
                      const Tensor& x, double h);

}  // namespace blockbert

#endif  // BLOCKBERT_CORE_NUMERICS_H_
