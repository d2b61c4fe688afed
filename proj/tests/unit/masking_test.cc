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
#include <array>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "blockbert/errors.h"
#include "common/oracles.h"

namespace blockbert {
namespace {

Mask FromBits(const testing::BitMatrix& bits) {
  Mask m(bits.size(), bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i)
    for (std::size_t j = 0; j < bits[i].size(); ++j) m.Set(i, j, bits[i][j]);
  return m;
}

Mask Block(std::size_t len, std::size_t n, const Permutation& perm) {
  return BuildBlockMask({len, n, perm});
}

// Per-cell predicate for the fixed strided pattern, written independently of
// the library's row-range construction.
bool FixedCausal(std::size_t i, std::size_t j, std::size_t s, std::size_t c) {
  if (j > i) return false;
  const bool summary = j % s >= s - c || (j % s == 0 && j > 0);
  const bool same_window = j / s == i / s;
  const bool previous_window = i % s == 0 && i > 0 && j / s + 1 == i / s;
  return summary || same_window || previous_window;
}

std::size_t FixedOracleCount(std::size_t len, std::size_t s, std::size_t c) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < len; ++i)
    for (std::size_t j = 0; j < len; ++j)
      count += FixedCausal(i, j, s, c) || FixedCausal(j, i, s, c);
  return count;
}

TEST(Permutation, ShiftExamples) {
  EXPECT_EQ(Permutation::Shift(3, 1).ToString(), "2,3,1");
  EXPECT_EQ(Permutation::Shift(3, 2).ToString(), "3,1,2");
  EXPECT_TRUE(Permutation::Shift(3, 3).IsIdentity());
  EXPECT_EQ(Permutation::Shift(2, 1).ToString(), "2,1");
  EXPECT_THROW(Permutation::Shift(3, 0), ArgumentError);
  EXPECT_THROW(Permutation::Shift(3, 4), ArgumentError);
}

TEST(Permutation, ParseValidatesBijection) {
  EXPECT_EQ(Permutation::Parse("2,3,1"), Permutation::Shift(3, 1));
  EXPECT_THROW(Permutation::Parse("2,2"), ArgumentError);
  EXPECT_THROW(Permutation::Parse("0,1"), ArgumentError);
  EXPECT_THROW(Permutation::Parse("1,x"), ArgumentError);
  EXPECT_THROW(Permutation::Parse(""), ArgumentError);
}

TEST(Permutation, InverseComposesToIdentity) {
  const Permutation p = Permutation::Parse("3,1,4,2");
  const Permutation inv = p.Inverse();
  for (std::size_t b = 0; b < 4; ++b) EXPECT_EQ(inv(p(b)), b);
}

TEST(BlockMask, HandExamples) {
  const testing::BitMatrix swap = {
      {0, 0, 1, 1}, {0, 0, 1, 1}, {1, 1, 0, 0}, {1, 1, 0, 0}};
  EXPECT_EQ(Block(4, 2, Permutation::Parse("2,1")), FromBits(swap));
  EXPECT_EQ(Block(4, 1, Permutation::Identity(1)), Mask::Full(4));
  const Mask diag = Block(6, 3, Permutation::Identity(3));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(diag.Get(i, j), i / 2 == j / 2);
}

TEST(BlockMask, AgreesWithNaiveConstructionOnRandomSpecs) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng() % 6;
    const std::size_t len = n * (1 + rng() % 20);
    std::vector<int> perm(n);
    for (std::size_t b = 0; b < n; ++b) perm[b] = static_cast<int>(b) + 1;
    std::shuffle(perm.begin(), perm.end(), rng);
    const Mask m = Block(len, n, Permutation::FromOneBased(perm));
    EXPECT_EQ(m, FromBits(testing::NaiveBlockMask(len, n, perm)))
        << "N=" << len << " n=" << n;
  }
}

TEST(BlockMask, RowColumnCountsAndDensity) {
  for (std::size_t n : {1, 2, 3, 4, 8}) {
    const std::size_t len = 48;
    for (std::size_t k = 1; k <= n; ++k) {
      const Mask m = Block(len, n, Permutation::Shift(n, k));
      EXPECT_EQ(m.CountSet(), len * len / n);
      EXPECT_DOUBLE_EQ(MaskDensity(m), 1.0 / static_cast<double>(n));
      for (std::size_t i = 0; i < len; ++i) {
        EXPECT_EQ(m.RowCount(i), len / n);
        EXPECT_EQ(m.ColCount(i), len / n);
      }
      EXPECT_FALSE(m.HasEmptyRow());
    }
  }
  EXPECT_DOUBLE_EQ(MaskDensity(Block(512, 2, Permutation::Parse("2,1"))), 0.5);
  EXPECT_NEAR(MaskDensity(Block(510, 3, Permutation::Shift(3, 1))), 1.0 / 3.0,
              1e-15);
}

TEST(BlockMask, ShiftsPartitionTheFullMatrix) {
  for (std::size_t n : {2, 3, 4}) {
    const std::size_t len = 12;
    Mask all(len, len);
    for (std::size_t k = 1; k <= n; ++k) {
      const Mask m = Block(len, n, Permutation::Shift(n, k));
      EXPECT_EQ((all & m).CountSet(), 0u) << "overlap at k=" << k;
      all = all | m;
    }
    EXPECT_EQ(all, Mask::Full(len));
  }
}

TEST(BlockMask, InversePermutationTransposes) {
  const Permutation p = Permutation::Parse("2,4,1,3");
  EXPECT_EQ(Block(16, 4, p).Transposed(), Block(16, 4, p.Inverse()));
}

TEST(BlockMask, PaddingRoundsUpToBlockMultiple) {
  const BlockMaskSpec spec{7, 2, Permutation::Parse("2,1")};
  EXPECT_EQ(spec.PaddedLength(), 8u);
  EXPECT_EQ(spec.BlockSize(), 4u);
  const Mask m = BuildBlockMask(spec);
  EXPECT_EQ(m.rows(), 8u);
  const Mask padded = ApplyKeyPadding(m, 7);
  EXPECT_EQ(padded.RowCount(0), 3u);  // keys 4, 5, 6
  EXPECT_EQ(padded.RowCount(4), 4u);
  EXPECT_FALSE(padded.Get(0, 7));
}

TEST(BlockMask, InvalidSpecs) {
  EXPECT_THROW(BuildBlockMask({4, 0, Permutation::Identity(1)}), ArgumentError);
  EXPECT_THROW(BuildBlockMask({2, 3, Permutation::Identity(3)}), ArgumentError);
  EXPECT_THROW(BuildBlockMask({4, 2, Permutation::Identity(3)}), ArgumentError);
}

TEST(SparseFixedMask, PublishedDensities) {
  const Mask m512 = BuildSparseFixedMask({512, 128, 32});
  const Mask m1024 = BuildSparseFixedMask({1024, 128, 32});
  EXPECT_NEAR(MaskDensity(m512), 0.4420, 1e-3);
  EXPECT_NEAR(MaskDensity(m1024), 0.3497, 1e-3);
  // Frozen from the per-cell oracle below.
  EXPECT_EQ(m512.CountSet(), 116028u);
  EXPECT_EQ(m1024.CountSet(), 367156u);
}

TEST(SparseFixedMask, MatchesPerCellOracle) {
  for (auto [len, s, c] : std::vector<std::array<std::size_t, 3>>{
           {512, 128, 32}, {40, 8, 3}, {37, 6, 1}, {16, 16, 4}}) {
    const Mask m = BuildSparseFixedMask({len, s, c});
    EXPECT_EQ(m.CountSet(), FixedOracleCount(len, s, c)) << len;
    for (std::size_t i = 0; i < len; ++i)
      for (std::size_t j = 0; j < len; ++j)
        ASSERT_EQ(m.Get(i, j), FixedCausal(i, j, s, c) || FixedCausal(j, i, s, c))
            << len << " " << i << "," << j;
    EXPECT_EQ(m, m.Transposed());
  }
}

TEST(SparseFixedMask, SingleWindowIsSymmetrizedTriangle) {
  EXPECT_EQ(BuildSparseFixedMask({8, 8, 2}), Mask::Full(8));
}

TEST(SparseFixedMask, InvalidSpecs) {
  EXPECT_THROW(BuildSparseFixedMask({64, 16, 16}), ArgumentError);
  EXPECT_THROW(BuildSparseFixedMask({64, 16, 0}), ArgumentError);
  EXPECT_THROW(BuildSparseFixedMask({8, 16, 2}), ArgumentError);
}

TEST(HeadAssignment, ThreeWaySplitUsesShiftedPermutations) {
  const HeadAssignment a = HeadAssignment::Parse("8:2:2");
  EXPECT_EQ(a.num_blocks(), 3u);
  EXPECT_EQ(a.total_heads(), 12u);
  const auto perms = a.HeadPermutations();
  ASSERT_EQ(perms.size(), 12u);
  EXPECT_EQ(perms[0].ToString(), "1,2,3");
  EXPECT_EQ(perms[8].ToString(), "2,3,1");
  EXPECT_EQ(perms[10].ToString(), "3,1,2");
  EXPECT_EQ(a.ToString(), "8:2:2");
}

TEST(HeadAssignment, ZeroCountsDropFromEntries) {
  const HeadAssignment a = HeadAssignment::Parse("12:0");
  ASSERT_EQ(a.entries().size(), 1u);
  EXPECT_TRUE(a.entries()[0].perm.IsIdentity());
  EXPECT_THROW(HeadAssignment::Parse("3:-1"), ArgumentError);
}

TEST(EnumerateAssignments, Counts) {
  const auto two = EnumerateAssignments(12, 2);
  EXPECT_EQ(two.size(), 13u);
  EXPECT_EQ(two.front(), HeadAssignment::Parse("12:0"));
  EXPECT_EQ(two.back(), HeadAssignment::Parse("0:12"));
  EXPECT_NE(std::find(two.begin(), two.end(), HeadAssignment::Parse("10:2")),
            two.end());
  EXPECT_EQ(EnumerateAssignments(12, 1).size(), 1u);
  EXPECT_EQ(EnumerateAssignments(4, 2).size(), 5u);
  EXPECT_EQ(EnumerateAssignments(12, 3).size(), 91u);  // C(14, 2)
}

TEST(MaskIo, CsvRoundTripAndPbmHeader) {
  const Mask m = Block(6, 3, Permutation::Shift(3, 1));
  std::stringstream csv;
  WriteMaskCsv(csv, m);
  EXPECT_EQ(ReadMaskCsv(csv), m);
  std::stringstream bad("0,1\n1\n");
  EXPECT_THROW(ReadMaskCsv(bad), FormatError);
  std::stringstream pbm;
  WriteMaskPbm(pbm, m);
  std::string magic;
  pbm >> magic;
  EXPECT_EQ(magic, "P1");
}

}  // namespace
}  // namespace blockbert
