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

// Raw-pointer kernels shared by the tensor-level products and the blockwise
// attention paths. Each output element is reduced in increasing k.

#ifndef BLOCKBERT_CORE_SRC_KERNELS_H_
#define BLOCKBERT_CORE_SRC_KERNELS_H_

#include <algorithm>
#include <cstddef>
#include <vector>

namespace blockbert::kernels {

// c[m x p] += a[m x k] * b[k x p], with leading dimensions lda/ldb/ldc.
template <typename T>
void GemmAccumulate(const T* a, std::size_t lda, const T* b, std::size_t ldb,
                    T* c, std::size_t ldc, std::size_t m, std::size_t k,
                    std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    const T* arow = a + i * lda;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T aik = arow[kk];
      const T* brow = b + kk * ldb;
      for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
    }
  }
}

// c[m x p] += a[k x m]^T * b[k x p].
template <typename T>
void GemmTransposedAAccumulate(const T* a, std::size_t lda, const T* b,
                               std::size_t ldb, T* c, std::size_t ldc,
                               std::size_t m, std::size_t k, std::size_t p) {
  for (std::size_t kk = 0; kk < k; ++kk) {
    const T* arow = a + kk * lda;
    const T* brow = b + kk * ldb;
    for (std::size_t i = 0; i < m; ++i) {
      const T aki = arow[i];
      T* crow = c + i * ldc;
      for (std::size_t j = 0; j < p; ++j) crow[j] += aki * brow[j];
    }
  }
}

// Copies b[p x k] (leading dimension ldb) into bt[k x p].
template <typename T>
void TransposeInto(const T* b, std::size_t ldb, std::size_t p, std::size_t k,
                   T* bt) {
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t j = 0; j < k; ++j) bt[j * p + r] = b[r * ldb + j];
}

}  // namespace blockbert::kernels

#endif  // BLOCKBERT_CORE_SRC_KERNELS_H_
