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

#ifndef BLOCKBERT_CORE_MASKING_H_
#define BLOCKBERT_CORE_MASKING_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blockbert {

// Bijection over n blocks. Printed and parsed one-based ("2,3,1"); indexed
// zero-based through operator().
class Permutation {
 public:
  static Permutation Identity(std::size_t n);
  // sigma^k with sigma = (2, 3, ..., n, 1); sigma^n is the identity.
  // Requires 1 <= k <= n.
  static Permutation Shift(std::size_t n, std::size_t k);
  static Permutation FromOneBased(std::span<const int> mapping);
  static Permutation Parse(std::string_view text);

  std::size_t size() const { return targets_.size(); }
  // Zero-based image of a zero-based block index.
  std::size_t operator()(std::size_t block) const { return targets_[block]; }
  std::vector<int> OneBased() const;
  Permutation Inverse() const;
  bool IsIdentity() const;
  std::string ToString() const;

  bool operator==(const Permutation&) const = default;

 private:
  explicit Permutation(std::vector<std::size_t> targets)
      : targets_(std::move(targets)) {}
  std::vector<std::size_t> targets_;
};

// Bit-packed binary matrix, one run of 64-bit words per row.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t rows, std::size_t cols, bool value = false);
  static Mask Full(std::size_t n) { return Mask(n, n, true); }
  static Mask Identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool Get(std::size_t i, std::size_t j) const {
    return (bits_[i * words_per_row_ + j / 64] >> (j % 64)) & 1u;
  }
  void Set(std::size_t i, std::size_t j, bool value);
  // Sets columns [begin, end) of row i.
  void SetRange(std::size_t i, std::size_t begin, std::size_t end);

  std::size_t CountSet() const;
  std::size_t RowCount(std::size_t i) const;
  std::size_t ColCount(std::size_t j) const;
  bool HasEmptyRow() const;

  Mask Transposed() const;
  Mask operator|(const Mask& other) const;
  Mask operator&(const Mask& other) const;
  bool operator==(const Mask& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t words_per_row_ = 0;
  std::vector<std::uint64_t> bits_;
};

struct BlockMaskSpec {
  std::size_t seq_len = 0;
  std::size_t num_blocks = 0;
  Permutation perm = Permutation::Identity(1);

  // ceil(seq_len / num_blocks).
  std::size_t BlockSize() const;
  // seq_len rounded up to a multiple of num_blocks.
  std::size_t PaddedLength() const;
  // Throws ArgumentError on n == 0, n > N or a permutation of the wrong size.
  void Validate() const;
};

// M_ij = 1 iff perm(block(i)) == block(j), block(x) = floor(x * n / N') over
// the padded length N'. The result is N' x N'.
Mask BuildBlockMask(const BlockMaskSpec& spec);

// Clears every column >= valid_len (key padding).
Mask ApplyKeyPadding(const Mask& mask, std::size_t valid_len);

// Set bits / (rows * cols).
double MaskDensity(const Mask& mask);

struct SparseFixedMaskSpec {
  std::size_t seq_len = 0;
  std::size_t stride = 0;
  std::size_t expressivity = 0;
  // 0 < expressivity < stride <= seq_len, else ArgumentError.
  void Validate() const;
};

// Fixed-mode strided pattern used as the sparse comparison baseline. The
// causal pattern lets position i see earlier positions of its own stride
// window plus the summary columns of every earlier window; the result is
// symmetrized (M | M^T) for use in a bidirectional encoder.
//
// Corner cells follow the Fairseq fixed-mode index rules: the summary of
// window w covers its last `expressivity` positions and the first position
// of window w + 1, and the first position of a window also sees the whole
// previous window.
Mask BuildSparseFixedMask(const SparseFixedMaskSpec& spec);

// Split of A heads across the n shift permutations. counts()[0] is the
// number of heads on the identity (1, 2, ..., n) and counts()[k] the number
// on sigma^k, so "8:2:2" for n = 3 means 8 heads on (1,2,3), 2 on (2,3,1)
// and 2 on (3,1,2). Zero counts are allowed.
class HeadAssignment {
 public:
  explicit HeadAssignment(std::vector<std::size_t> counts);
  // "10:2" style. The number of fields is the block count.
  static HeadAssignment Parse(std::string_view text);
  // All heads on the identity permutation over n blocks.
  static HeadAssignment AllIdentity(std::size_t heads, std::size_t n);

  struct Entry {
    Permutation perm;
    std::size_t heads;
  };

  std::size_t num_blocks() const { return counts_.size(); }
  std::size_t total_heads() const;
  const std::vector<std::size_t>& counts() const { return counts_; }
  // Permutations with a positive head count, in counts() order.
  std::vector<Entry> entries() const;
  // One permutation per head, heads grouped in entries() order.
  std::vector<Permutation> HeadPermutations() const;
  std::string ToString() const;

  bool operator==(const HeadAssignment&) const = default;

 private:
  std::vector<std::size_t> counts_;
};

// Every composition of `heads` over the n shift permutations, zero counts
// included; identity count runs from `heads` down to 0 in the outer loop.
std::vector<HeadAssignment> EnumerateAssignments(std::size_t heads,
                                                 std::size_t n);

// CSV: one row per line, comma-separated 0/1 cells.
void WriteMaskCsv(std::ostream& os, const Mask& mask);
Mask ReadMaskCsv(std::istream& is);
// Plain PBM (P1); set bits render black.
void WriteMaskPbm(std::ostream& os, const Mask& mask);

}  // namespace blockbert

#endif  // BLOCKBERT_CORE_MASKING_H_
