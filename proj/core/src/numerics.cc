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

#include "blockbert/numerics.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "kernels.h"

namespace blockbert {
namespace {

template <typename T>
void CheckMatMul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.empty() || b.rank() != 2 || a.inner() != b.rows()) {
    throw DimensionError("matmul shape mismatch: " + ShapeToString(a.shape()) +
                         " x " + ShapeToString(b.shape()));
  }
}

template <typename T>
void GemmAccumulate(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
                    std::size_t p) {
  kernels::GemmAccumulate(a, k, b, p, c, p, m, k, p);
}

constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluCubic = 0.044715;

}  // namespace

template <typename T>
void MatMulInto(const BasicTensor<T>& a, const BasicTensor<T>& b,
                BasicTensor<T>& out) {
  CheckMatMul(a, b);
  if (out.outer() != a.outer() || out.inner() != b.cols()) {
    throw DimensionError("matmul output " + ShapeToString(out.shape()) +
                         " does not fit " + ShapeToString(a.shape()) + " x " +
                         ShapeToString(b.shape()));
  }
  std::fill(out.values().begin(), out.values().end(), T(0));
  GemmAccumulate(a.data(), b.data(), out.data(), a.outer(), a.inner(),
                 b.cols());
}

template <typename T>
BasicTensor<T> MatMul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  CheckMatMul(a, b);
  Shape shape = a.shape();
  shape.back() = b.cols();
  BasicTensor<T> out(std::move(shape));
  GemmAccumulate(a.data(), b.data(), out.data(), a.outer(), a.inner(),
                 b.cols());
  return out;
}

template <typename T>
void MatMulTransposedBInto(const BasicTensor<T>& a, const BasicTensor<T>& b,
                           BasicTensor<T>& out) {
  if (a.empty() || b.empty() || a.inner() != b.inner() ||
      out.outer() != a.outer() || out.inner() != b.outer()) {
    throw DimensionError("matmul (b transposed) shape mismatch: " +
                         ShapeToString(a.shape()) + " x " +
                         ShapeToString(b.shape()) + "^T -> " +
                         ShapeToString(out.shape()));
  }
  const BasicTensor<T> bt = Transpose(b);
  std::fill(out.values().begin(), out.values().end(), T(0));
  GemmAccumulate(a.data(), bt.data(), out.data(), a.outer(), a.inner(),
                 b.outer());
}

template <typename T>
BasicTensor<T> MatMulTransposedB(const BasicTensor<T>& a,
                                 const BasicTensor<T>& b) {
  if (a.empty() || b.empty()) {
    throw DimensionError("matmul (b transposed) on empty operand");
  }
  BasicTensor<T> out({a.outer(), b.outer()});
  MatMulTransposedBInto(a, b, out);
  return out;
}

template <typename T>
BasicTensor<T> MatMulTransposedA(const BasicTensor<T>& a,
                                 const BasicTensor<T>& b) {
  if (a.empty() || b.empty() || a.outer() != b.outer()) {
    throw DimensionError("matmul (a transposed) shape mismatch: " +
                         ShapeToString(a.shape()) + "^T x " +
                         ShapeToString(b.shape()));
  }
  const std::size_t k = a.outer(), m = a.inner(), p = b.inner();
  BasicTensor<T> out({m, p});
  kernels::GemmTransposedAAccumulate(a.data(), m, b.data(), p, out.data(), p,
                                     m, k, p);
  return out;
}

template <typename T>
BasicTensor<T> Transpose(const BasicTensor<T>& a) {
  if (a.rank() != 2) {
    throw DimensionError("transpose needs rank 2, got " +
                         ShapeToString(a.shape()));
  }
  BasicTensor<T> out({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

template <typename T>
void SoftmaxRowsInPlace(BasicTensor<T>& x) {
  const std::size_t width = x.inner();
  for (std::size_t r = 0; r < x.outer(); ++r) {
    T* row = x.data() + r * width;
    T max = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < width; ++j) max = std::max(max, row[j]);
    if (!std::isfinite(max)) {
      throw DegenerateRowError("softmax row " + std::to_string(r) +
                               " has no finite entry");
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

template <typename T>
BasicTensor<T> SoftmaxRows(const BasicTensor<T>& x) {
  BasicTensor<T> out = x;
  SoftmaxRowsInPlace(out);
  return out;
}

template Tensor MatMul(const Tensor&, const Tensor&);
template TensorF MatMul(const TensorF&, const TensorF&);
template void MatMulInto(const Tensor&, const Tensor&, Tensor&);
template void MatMulInto(const TensorF&, const TensorF&, TensorF&);
template void MatMulTransposedBInto(const Tensor&, const Tensor&, Tensor&);
template void MatMulTransposedBInto(const TensorF&, const TensorF&, TensorF&);
template Tensor MatMulTransposedB(const Tensor&, const Tensor&);
template TensorF MatMulTransposedB(const TensorF&, const TensorF&);
template Tensor MatMulTransposedA(const Tensor&, const Tensor&);
template TensorF MatMulTransposedA(const TensorF&, const TensorF&);
template Tensor Transpose(const Tensor&);
template TensorF Transpose(const TensorF&);
template Tensor SoftmaxRows(const Tensor&);
template TensorF SoftmaxRows(const TensorF&);
template void SoftmaxRowsInPlace(Tensor&);
template void SoftmaxRowsInPlace(TensorF&);

Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps, LayerNormCache* cache) {
  const std::size_t width = x.inner();
  if (x.empty() || gamma.size() != width || beta.size() != width) {
    throw DimensionError("layer_norm shape mismatch: x " +
                         ShapeToString(x.shape()) + ", gamma " +
                         ShapeToString(gamma.shape()) + ", beta " +
                         ShapeToString(beta.shape()));
  }
  if (!(eps >= 0.0)) throw ArgumentError("layer_norm eps must be >= 0");
  Tensor out(x.shape());
  Tensor normalized(x.shape());
  Tensor inv_std({x.outer()});
  for (std::size_t r = 0; r < x.outer(); ++r) {
    const auto in = x.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(width);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(width);
    if (var + eps <= 0.0) {
      throw ArgumentError("layer_norm row " + std::to_string(r) +
                          " has zero variance and eps == 0");
    }
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[r] = inv;
    auto xhat = normalized.row(r);
    auto y = out.row(r);
    for (std::size_t j = 0; j < width; ++j) {
      xhat[j] = (in[j] - mean) * inv;
      y[j] = gamma[j] * xhat[j] + beta[j];
    }
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

LayerNormGrads LayerNormBackward(const Tensor& upstream, const Tensor& gamma,
                                 const LayerNormCache& cache) {
  const std::size_t width = upstream.inner();
  if (upstream.shape() != cache.normalized.shape() || gamma.size() != width) {
    throw DimensionError("layer_norm backward shape mismatch: upstream " +
                         ShapeToString(upstream.shape()) + ", cache " +
                         ShapeToString(cache.normalized.shape()));
  }
  LayerNormGrads g{Tensor(upstream.shape()), Tensor({width}),
                   Tensor({width})};
  const double inv_width = 1.0 / static_cast<double>(width);
  for (std::size_t r = 0; r < upstream.outer(); ++r) {
    const auto dy = upstream.row(r);
    const auto xhat = cache.normalized.row(r);
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      g.dgamma[j] += dy[j] * xhat[j];
      g.dbeta[j] += dy[j];
      const double dxhat = dy[j] * gamma[j];
      mean_dxhat += dxhat;
      mean_dxhat_xhat += dxhat * xhat[j];
    }
    mean_dxhat *= inv_width;
    mean_dxhat_xhat *= inv_width;
    auto dx = g.dx.row(r);
    const double inv = cache.inv_std[r];
    for (std::size_t j = 0; j < width; ++j) {
      const double dxhat = dy[j] * gamma[j];
      dx[j] = inv * (dxhat - mean_dxhat - xhat[j] * mean_dxhat_xhat);
    }
  }
  return g;
}

double Gelu(double x) {
  const double u = kGeluScale * (x + kGeluCubic * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double GeluDerivative(double x) {
  const double u = kGeluScale * (x + kGeluCubic * x * x * x);
  const double t = std::tanh(u);
  const double du = kGeluScale * (1.0 + 3.0 * kGeluCubic * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

Tensor Gelu(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = Gelu(x[i]);
  return out;
}

Tensor Add(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  AddInPlace(out, b);
  return out;
}

void AddInPlace(Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw DimensionError("add shape mismatch: " + ShapeToString(a.shape()) +
                         " + " + ShapeToString(b.shape()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

void ScaleInPlace(Tensor& a, double factor) {
  for (double& v : a.values()) v *= factor;
}

void AddRowBroadcastInPlace(Tensor& a, const Tensor& bias) {
  if (bias.size() != a.inner()) {
    throw DimensionError("bias " + ShapeToString(bias.shape()) +
                         " does not broadcast over " +
                         ShapeToString(a.shape()));
  }
  for (std::size_t r = 0; r < a.outer(); ++r) {
    auto row = a.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias[j];
  }
}

Tensor SumRows(const Tensor& a) {
  Tensor out({a.inner()});
  for (std::size_t r = 0; r < a.outer(); ++r) {
    const auto row = a.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) out[j] += row[j];
  }
  return out;
}

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("compare shape mismatch: " + ShapeToString(a.shape()) +
                         " vs " + ShapeToString(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool AllFinite(const Tensor& a) {
  for (double v : a.values())
    if (!std::isfinite(v)) return false;
  return true;
}

LineFit OlsLineFit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw DimensionError("ols: " + std::to_string(xs.size()) + " xs vs " +
                         std::to_string(ys.size()) + " ys");
  }
  if (xs.size() < 2) throw SingularDesignError("ols needs at least two points");
  const double count = static_cast<double>(xs.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= count;
  mean_y /= count;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
    sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
  }
  if (sxx == 0.0) throw SingularDesignError("ols: all xs are equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - fit.slope * xs[i] - fit.intercept;
    fit.residual_sum_squares += r * r;
  }
  return fit;
}

double RSquared(std::span<const double> xs, std::span<const double> ys,
                const LineFit& fit) {
  double mean_y = 0.0;
  for (double y : ys) mean_y += y;
  mean_y /= static_cast<double>(ys.size());
  double total = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double r = ys[i] - fit.slope * xs[i] - fit.intercept;
    residual += r * r;
    total += (ys[i] - mean_y) * (ys[i] - mean_y);
  }
  if (total == 0.0) return residual == 0.0 ? 1.0 : 0.0;
  return 1.0 - residual / total;
}

Tensor FiniteDiffGrad(const std::function<double(const Tensor&)>& f,
                      const Tensor& x, double h) {
  if (!(h > 0.0)) throw ArgumentError("finite_diff_grad needs h > 0");
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw OracleError("non-finite function value at coordinate " +
                        std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace blockbert
