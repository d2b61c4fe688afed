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

#include "blockbert/data.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "blockbert/errors.h"

namespace blockbert {
namespace {

PackedSequence Sequence(std::vector<int> ids) {
  PackedSequence s;
  s.attention_allowed.assign(ids.size(), 1);
  s.ids = std::move(ids);
  return s;
}

TEST(Vocab, FrequencyThenLexicographicOrder) {
  const Vocab v = BuildVocab("b a c a b d", 100);
  EXPECT_EQ(v.size(), 9u);
  EXPECT_EQ(v.Id("a"), kNumReservedIds);      // 2 occurrences, "a" < "b"
  EXPECT_EQ(v.Id("b"), kNumReservedIds + 1);
  EXPECT_EQ(v.Id("c"), kNumReservedIds + 2);  // 1 occurrence, "c" < "d"
  EXPECT_EQ(v.Id("d"), kNumReservedIds + 3);
  EXPECT_EQ(v.Token(v.Id("c")), "c");
}

TEST(Vocab, MoreFrequentTokenRanksFirst) {
  const Vocab v = BuildVocab("a b a", 10);
  EXPECT_LT(v.Id("a"), v.Id("b"));
}

TEST(Vocab, OverflowMapsToUnknown) {
  const Vocab v = BuildVocab("x x x y y z", kNumReservedIds + 2);
  EXPECT_EQ(v.size(), static_cast<std::size_t>(kNumReservedIds + 2));
  EXPECT_EQ(v.Id("z"), kUnkId);
  EXPECT_EQ(v.Id("never-seen"), kUnkId);
  EXPECT_EQ(v.Encode("x z y"), (std::vector<int>{5, kUnkId, 6}));
}

TEST(Vocab, EmptyCorpusIsRejected) {
  EXPECT_THROW(BuildVocab("  \n\n ", 10), ArgumentError);
}

TEST(Vocab, SaveLoadRoundTrip) {
  const Vocab v = BuildVocab(SyntheticMarkovCorpus(3, 4, 50, 30), 64);
  std::stringstream ss;
  v.Save(ss);
  const Vocab w = Vocab::Load(ss);
  ASSERT_EQ(w.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    EXPECT_EQ(w.Token(static_cast<int>(i)), v.Token(static_cast<int>(i)));
  std::stringstream dup("a\nb\na\n");
  EXPECT_THROW(Vocab::Load(dup), FormatError);
}

TEST(Vocab, DeterministicAcrossBuilds) {
  const std::string text = SyntheticMarkovCorpus(9, 3, 80, 40);
  EXPECT_EQ(BuildVocab(text, 30).Encode(text), BuildVocab(text, 30).Encode(text));
}

TEST(Documents, SplitOnBlankLines) {
  const auto docs = SplitDocuments("a b\nc\n\n\n d e \n\nf\n");
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(Tokenize(docs[0]), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(Tokenize(docs[2]), (std::vector<std::string>{"f"}));
}

TEST(Documents, MissingFileNamesPath) {
  try {
    ReadTextFile("/nonexistent/corpus.txt");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/corpus.txt"),
              std::string::npos);
  }
}

TEST(PackSequences, ShortDocumentIsPadded) {
  const auto seqs = PackSequences({{5, 6, 7}}, 8);
  ASSERT_EQ(seqs.size(), 1u);
  EXPECT_EQ(seqs[0].ids, (std::vector<int>{5, 6, 7, 0, 0, 0, 0, 0}));
  EXPECT_EQ(seqs[0].attention_allowed,
            (std::vector<std::uint8_t>{1, 1, 1, 0, 0, 0, 0, 0}));
}

TEST(PackSequences, NeverCrossesDocumentBoundaries) {
  const auto seqs = PackSequences({{5, 5, 5, 5, 5}, {6, 6, 6, 6, 6}}, 8);
  ASSERT_EQ(seqs.size(), 2u);
  for (const auto& s : seqs) {
    std::set<int> tokens(s.ids.begin(), s.ids.end());
    tokens.erase(kPadId);
    EXPECT_EQ(tokens.size(), 1u);
  }
  EXPECT_EQ(seqs[0].doc_index, 0u);
  EXPECT_EQ(seqs[1].doc_index, 1u);
}

TEST(PackSequences, LongDocumentIsSplit) {
  std::vector<int> doc(19, 7);
  const auto seqs = PackSequences({doc}, 8);
  EXPECT_EQ(seqs.size(), 3u);  // ceil(19 / 8)
  for (const auto& s : seqs) EXPECT_EQ(s.length(), 8u);
  EXPECT_EQ(seqs[2].attention_allowed[2], 1);
  EXPECT_EQ(seqs[2].attention_allowed[3], 0);
}

TEST(PadToBlockMultiple, RoundsUp) {
  EXPECT_EQ(PadToBlockMultiple(Sequence({5, 5, 5, 5, 5, 5, 5}), 2).length(), 8u);
  EXPECT_EQ(PadToBlockMultiple(Sequence(std::vector<int>(8, 5)), 2).length(), 8u);
  const PackedSequence s = PadToBlockMultiple(Sequence({5, 6, 7, 8, 9}), 3);
  EXPECT_EQ(s.length(), 6u);
  EXPECT_EQ(s.ids.back(), kPadId);
  EXPECT_EQ(s.attention_allowed.back(), 0);
}

TEST(MlmMasking, NothingSelectedIsSkipped) {
  // With a tiny rate the first draws of this seed select nothing.
  const PackedSequence s = Sequence({5, 6});
  int skipped = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    skipped += ApplyMlmMasking(s, 0.01, 32, seed).has_value() ? 0 : 1;
  EXPECT_GT(skipped, 0);
  const MlmBatch b = MakeMlmBatch(std::vector<PackedSequence>{s}, 1e-9, 32, 4);
  EXPECT_EQ(b.batch, 0u);
  EXPECT_EQ(b.skipped, 1u);
}

TEST(MlmMasking, SameSeedSameCorruption) {
  const auto seqs = CopyTaskSequences(4, 32, 64, 1);
  const MlmBatch a = MakeMlmBatch(seqs, 0.15, 64, 99);
  const MlmBatch b = MakeMlmBatch(seqs, 0.15, 64, 99);
  EXPECT_EQ(a.input, b.input);
  EXPECT_EQ(a.loss_mask, b.loss_mask);
  const MlmBatch c = MakeMlmBatch(seqs, 0.15, 64, 100);
  EXPECT_NE(a.loss_mask, c.loss_mask);
}

TEST(MlmMasking, NeverTouchesPadOrSpecialPositions) {
  PackedSequence s = Sequence({kClsId, 5, 6, 7, kSepId, 8, 9});
  s = PadToBlockMultiple(s, 4);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto row = ApplyMlmMasking(s, 0.5, 32, seed);
    if (!row) continue;
    EXPECT_EQ(row->target, s.ids);
    for (std::size_t i : {0, 4, 7}) {
      EXPECT_EQ(row->loss_mask[i], 0);
      EXPECT_EQ(row->input[i], s.ids[i]);
    }
    for (std::size_t i = 0; i < s.length(); ++i)
      if (!row->loss_mask[i]) EXPECT_EQ(row->input[i], s.ids[i]);
  }
}

TEST(MlmMasking, SelectionRateWithinThreeSigma) {
  const PackedSequence s = Sequence(std::vector<int>(10000, 9));
  const auto row = ApplyMlmMasking(s, 0.15, 64, 2024);
  ASSERT_TRUE(row.has_value());
  std::size_t selected = 0, masked = 0, kept = 0;
  for (std::size_t i = 0; i < s.length(); ++i) {
    if (!row->loss_mask[i]) continue;
    ++selected;
    masked += row->input[i] == kMaskId;
    kept += row->input[i] == 9;
  }
  const double sigma = std::sqrt(10000 * 0.15 * 0.85);
  EXPECT_NEAR(static_cast<double>(selected), 1500.0, 3 * sigma);
  const double frac_mask = static_cast<double>(masked) / selected;
  EXPECT_NEAR(frac_mask, 0.8, 3 * std::sqrt(0.8 * 0.2 / selected));
  // "Random" replacements can land on the original id (1 in 59 here).
  const double frac_kept = static_cast<double>(kept) / selected;
  EXPECT_NEAR(frac_kept, 0.1 + 0.1 / 59.0, 3 * std::sqrt(0.1 * 0.9 / selected));
}

TEST(MlmMasking, RateMustBeOpenInterval) {
  EXPECT_THROW(ApplyMlmMasking(Sequence({5}), 0.0, 10, 1), ArgumentError);
  EXPECT_THROW(ApplyMlmMasking(Sequence({5}), 1.0, 10, 1), ArgumentError);
}

TEST(SlidingWindow, ClampsLastWindow) {
  const auto w = SlidingWindowSplit(1000, 512, 128);
  std::vector<std::size_t> starts;
  for (const auto& x : w) {
    starts.push_back(x.begin);
    EXPECT_EQ(x.end - x.begin, 512u);
  }
  EXPECT_EQ(starts, (std::vector<std::size_t>{0, 128, 256, 384, 488}));
  EXPECT_EQ(w.back().end, 1000u);
}

TEST(SlidingWindow, ShortSequenceAndCoverage) {
  const auto one = SlidingWindowSplit(300, 512, 128);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].end, 300u);
  const auto w = SlidingWindowSplit(777, 100, 30);
  std::vector<int> covered(777, 0);
  for (const auto& x : w) {
    EXPECT_LE(x.end - x.begin, 100u);
    for (std::size_t i = x.begin; i < x.end; ++i) covered[i] = 1;
  }
  for (int c : covered) EXPECT_EQ(c, 1);
  EXPECT_EQ(w[0].end - w[1].begin, 70u);  // overlap N - stride
}

TEST(SlidingWindow, InvalidStride) {
  EXPECT_THROW(SlidingWindowSplit(10, 4, 0), ArgumentError);
  EXPECT_THROW(SlidingWindowSplit(10, 4, -3), ArgumentError);
  EXPECT_THROW(SlidingWindowSplit(10, 4, 5), ArgumentError);
}

TEST(Synthetic, CopyTaskRepeatsFirstHalf) {
  const auto seqs = CopyTaskSequences(10, 16, 64, 5);
  for (const auto& s : seqs) {
    ASSERT_EQ(s.length(), 16u);
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_EQ(s.ids[i], s.ids[i + 8]);
      EXPECT_GE(s.ids[i], kNumReservedIds);
      EXPECT_LT(s.ids[i], 64);
    }
  }
  EXPECT_THROW(CopyTaskSequences(1, 7, 64, 1), ArgumentError);
}

TEST(Synthetic, MarkovCorpusIsSeeded) {
  EXPECT_EQ(SyntheticMarkovCorpus(1, 3, 20, 10), SyntheticMarkovCorpus(1, 3, 20, 10));
  EXPECT_NE(SyntheticMarkovCorpus(1, 3, 20, 10), SyntheticMarkovCorpus(2, 3, 20, 10));
  EXPECT_EQ(SplitDocuments(SyntheticMarkovCorpus(1, 3, 20, 10)).size(), 3u);
}

}  // namespace
}  // namespace blockbert
