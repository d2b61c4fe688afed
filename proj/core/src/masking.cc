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

#include "blockbert/masking.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "blockbert/errors.h"

namespace blockbert {
namespace {

std::vector<std::string_view> SplitOn(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

long long ParseInteger(std::string_view field, std::string_view what) {
  field = Trim(field);
  long long value = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw ArgumentError("invalid " + std::string(what) + " field '" +
                        std::string(field) + "'");
  }
  return value;
}

}  // namespace

Permutation Permutation::Identity(std::size_t n) {
  if (n == 0) throw ArgumentError("permutation size must be >= 1");
  std::vector<std::size_t> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = i;
  return Permutation(std::move(t));
}

Permutation Permutation::Shift(std::size_t n, std::size_t k) {
  if (n == 0 || k < 1 || k > n) {
    throw ArgumentError("shift power k=" + std::to_string(k) +
                        " out of range [1, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = (i + k) % n;
  return Permutation(std::move(t));
}

Permutation Permutation::FromOneBased(std::span<const int> mapping) {
  const std::size_t n = mapping.size();
  if (n == 0) throw ArgumentError("permutation must not be empty");
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int v = mapping[i];
    if (v < 1 || static_cast<std::size_t>(v) > n || seen[v - 1]) {
      throw ArgumentError("not a permutation of 1.." + std::to_string(n) +
                          ": entry " + std::to_string(v) + " at position " +
                          std::to_string(i + 1));
    }
    seen[v - 1] = true;
    t[i] = static_cast<std::size_t>(v - 1);
  }
  return Permutation(std::move(t));
}

Permutation Permutation::Parse(std::string_view text) {
  std::vector<int> values;
  for (std::string_view field : SplitOn(text, ',')) {
    values.push_back(static_cast<int>(ParseInteger(field, "permutation")));
  }
  return FromOneBased(values);
}

std::vector<int> Permutation::OneBased() const {
  std::vector<int> out(targets_.size());
  for (std::size_t i = 0; i < targets_.size(); ++i)
    out[i] = static_cast<int>(targets_[i] + 1);
  return out;
}

Permutation Permutation::Inverse() const {
  std::vector<std::size_t> inv(targets_.size());
  for (std::size_t i = 0; i < targets_.size(); ++i) inv[targets_[i]] = i;
  return Permutation(std::move(inv));
}

bool Permutation::IsIdentity() const {
  for (std::size_t i = 0; i < targets_.size(); ++i)
    if (targets_[i] != i) return false;
  return true;
}

std::string Permutation::ToString() const {
  std::string out;
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(targets_[i] + 1);
  }
  return out;
}

Mask::Mask(std::size_t rows, std::size_t cols, bool value)
    : rows_(rows), cols_(cols), words_per_row_((cols + 63) / 64),
      bits_(rows * words_per_row_, 0) {
  if (value) {
    for (std::size_t i = 0; i < rows; ++i) SetRange(i, 0, cols);
  }
}

Mask Mask::Identity(std::size_t n) {
  Mask m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.Set(i, i, true);
  return m;
}

void Mask::Set(std::size_t i, std::size_t j, bool value) {
  std::uint64_t& word = bits_[i * words_per_row_ + j / 64];
  const std::uint64_t bit = std::uint64_t{1} << (j % 64);
  word = value ? (word | bit) : (word & ~bit);
}

void Mask::SetRange(std::size_t i, std::size_t begin, std::size_t end) {
  std::uint64_t* row = bits_.data() + i * words_per_row_;
  for (std::size_t j = begin; j < end;) {
    const std::size_t offset = j % 64;
    const std::size_t span = std::min<std::size_t>(64 - offset, end - j);
    const std::uint64_t run =
        span == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << span) - 1);
    row[j / 64] |= run << offset;
    j += span;
  }
}

std::size_t Mask::CountSet() const {
  std::size_t n = 0;
  for (std::uint64_t w : bits_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::size_t Mask::RowCount(std::size_t i) const {
  std::size_t n = 0;
  for (std::size_t w = 0; w < words_per_row_; ++w)
    n += static_cast<std::size_t>(std::popcount(bits_[i * words_per_row_ + w]));
  return n;
}

std::size_t Mask::ColCount(std::size_t j) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < rows_; ++i) n += Get(i, j) ? 1 : 0;
  return n;
}

bool Mask::HasEmptyRow() const {
  for (std::size_t i = 0; i < rows_; ++i)
    if (RowCount(i) == 0) return true;
  return false;
}

Mask Mask::Transposed() const {
  Mask t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      if (Get(i, j)) t.Set(j, i, true);
  return t;
}

Mask Mask::operator|(const Mask& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw DimensionError("mask union shape mismatch");
  }
  Mask out = *this;
  for (std::size_t w = 0; w < bits_.size(); ++w) out.bits_[w] |= other.bits_[w];
  return out;
}

Mask Mask::operator&(const Mask& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw DimensionError("mask intersection shape mismatch");
  }
  Mask out = *this;
  for (std::size_t w = 0; w < bits_.size(); ++w) out.bits_[w] &= other.bits_[w];
  return out;
}

std::size_t BlockMaskSpec::BlockSize() const {
  return (seq_len + num_blocks - 1) / num_blocks;
}

std::size_t BlockMaskSpec::PaddedLength() const {
  return BlockSize() * num_blocks;
}

void BlockMaskSpec::Validate() const {
  if (num_blocks == 0 || seq_len == 0) {
    throw ArgumentError("block mask needs N >= 1 and n >= 1");
  }
  if (num_blocks > seq_len) {
    throw ArgumentError("block count n=" + std::to_string(num_blocks) +
                        " exceeds sequence length N=" + std::to_string(seq_len));
  }
  if (perm.size() != num_blocks) {
    throw ArgumentError("permutation over " + std::to_string(perm.size()) +
                        " blocks does not match n=" + std::to_string(num_blocks));
  }
}

Mask BuildBlockMask(const BlockMaskSpec& spec) {
  spec.Validate();
  const std::size_t length = spec.PaddedLength();
  const std::size_t block = spec.BlockSize();
  Mask m(length, length);
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t target = spec.perm(i / block);
    m.SetRange(i, target * block, (target + 1) * block);
  }
  return m;
}

Mask ApplyKeyPadding(const Mask& mask, std::size_t valid_len) {
  if (valid_len >= mask.cols()) return mask;
  Mask keep(mask.rows(), mask.cols());
  for (std::size_t i = 0; i < mask.rows(); ++i) keep.SetRange(i, 0, valid_len);
  return mask & keep;
}

double MaskDensity(const Mask& mask) {
  if (mask.rows() == 0 || mask.cols() == 0) return 0.0;
  return static_cast<double>(mask.CountSet()) /
         (static_cast<double>(mask.rows()) * static_cast<double>(mask.cols()));
}

void SparseFixedMaskSpec::Validate() const {
  if (expressivity == 0 || expressivity >= stride) {
    throw ArgumentError("sparse fixed mask needs 0 < c < stride, got c=" +
                        std::to_string(expressivity) +
                        ", stride=" + std::to_string(stride));
  }
  if (stride > seq_len) {
    throw ArgumentError("sparse fixed mask stride " + std::to_string(stride) +
                        " exceeds N=" + std::to_string(seq_len));
  }
}

Mask BuildSparseFixedMask(const SparseFixedMaskSpec& spec) {
  spec.Validate();
  const std::size_t n = spec.seq_len, s = spec.stride, c = spec.expressivity;
  // Summary columns: [w*s - c, w*s] for every window boundary w >= 1.
  std::vector<bool> summary(n, false);
  for (std::size_t boundary = s; boundary - c < n; boundary += s) {
    for (std::size_t j = boundary - c; j <= boundary && j < n; ++j)
      summary[j] = true;
  }
  Mask causal(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t window_start =
        (i % s == 0 && i != 0) ? i - s : (i / s) * s;
    causal.SetRange(i, window_start, i + 1);
    for (std::size_t j = 0; j <= i; ++j)
      if (summary[j]) causal.Set(i, j, true);
  }
  return causal | causal.Transposed();
}

HeadAssignment::HeadAssignment(std::vector<std::size_t> counts)
    : counts_(std::move(counts)) {
  if (counts_.empty()) throw ArgumentError("head assignment needs n >= 1");
}

HeadAssignment HeadAssignment::Parse(std::string_view text) {
  std::vector<std::size_t> counts;
  for (std::string_view field : SplitOn(text, ':')) {
    const long long v = ParseInteger(field, "head count");
    if (v < 0) throw ArgumentError("head counts must be non-negative");
    counts.push_back(static_cast<std::size_t>(v));
  }
  return HeadAssignment(std::move(counts));
}

HeadAssignment HeadAssignment::AllIdentity(std::size_t heads, std::size_t n) {
  std::vector<std::size_t> counts(n, 0);
  counts.at(0) = heads;
  return HeadAssignment(std::move(counts));
}

std::size_t HeadAssignment::total_heads() const {
  std::size_t t = 0;
  for (std::size_t c : counts_) t += c;
  return t;
}

std::vector<HeadAssignment::Entry> HeadAssignment::entries() const {
  const std::size_t n = counts_.size();
  std::vector<Entry> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (counts_[k] == 0) continue;
    out.push_back({Permutation::Shift(n, k == 0 ? n : k), counts_[k]});
  }
  return out;
}

std::vector<Permutation> HeadAssignment::HeadPermutations() const {
  std::vector<Permutation> out;
  for (const Entry& e : entries())
    for (std::size_t h = 0; h < e.heads; ++h) out.push_back(e.perm);
  return out;
}

std::string HeadAssignment::ToString() const {
  std::string out;
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    if (k) out += ':';
    out += std::to_string(counts_[k]);
  }
  return out;
}

std::vector<HeadAssignment> EnumerateAssignments(std::size_t heads,
                                                 std::size_t n) {
  if (n == 0) throw ArgumentError("enumerate_assignments needs n >= 1");
  std::vector<HeadAssignment> out;
  std::vector<std::size_t> counts(n, 0);
  // Depth-first over positions, larger counts first.
  auto recurse = [&](auto& self, std::size_t pos, std::size_t remaining) -> void {
    if (pos + 1 == n) {
      counts[pos] = remaining;
      out.emplace_back(counts);
      return;
    }
    for (std::size_t c = remaining + 1; c-- > 0;) {
      counts[pos] = c;
      self(self, pos + 1, remaining - c);
    }
  };
  recurse(recurse, 0, heads);
  return out;
}

void WriteMaskCsv(std::ostream& os, const Mask& mask) {
  std::string line;
  for (std::size_t i = 0; i < mask.rows(); ++i) {
    line.clear();
    for (std::size_t j = 0; j < mask.cols(); ++j) {
      if (j) line += ',';
      line += mask.Get(i, j) ? '1' : '0';
    }
    line += '\n';
    os << line;
  }
}

Mask ReadMaskCsv(std::istream& is) {
  std::vector<std::vector<bool>> rows;
  std::string line;
  while (std::getline(is, line)) {
    const std::string_view trimmed = Trim(line);
    if (trimmed.empty()) continue;
    std::vector<bool> row;
    for (std::string_view cell : SplitOn(trimmed, ',')) {
      cell = Trim(cell);
      if (cell == "1") {
        row.push_back(true);
      } else if (cell == "0") {
        row.push_back(false);
      } else {
        throw FormatError("mask CSV row " + std::to_string(rows.size() + 1) +
                          ": cell '" + std::string(cell) + "' is not 0 or 1");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("mask CSV row " + std::to_string(rows.size() + 1) +
                        " has " + std::to_string(row.size()) +
                        " cells, expected " +
                        std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("mask CSV is empty");
  Mask m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      if (rows[i][j]) m.Set(i, j, true);
  return m;
}

void WriteMaskPbm(std::ostream& os, const Mask& mask) {
  os << "P1\n# density " << MaskDensity(mask) << "\n"
     << mask.cols() << ' ' << mask.rows() << '\n';
  std::string line;
  for (std::size_t i = 0; i < mask.rows(); ++i) {
    line.clear();
    for (std::size_t j = 0; j < mask.cols(); ++j) {
      if (j) line += ' ';
      line += mask.Get(i, j) ? '1' : '0';
    }
    line += '\n';
    os << line;
  }
}

}  // namespace blockbert
