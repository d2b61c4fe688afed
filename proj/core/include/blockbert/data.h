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

#ifndef BLOCKBERT_CORE_DATA_H_
#define BLOCKBERT_CORE_DATA_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace blockbert {

inline constexpr int kPadId = 0;
inline constexpr int kMaskId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr int kUnkId = 4;
inline constexpr int kNumReservedIds = 5;

// Whitespace-token vocabulary. Ids 0-4 are reserved ([PAD], [MASK], [CLS],
// [SEP], [UNK]); the rest are ranked by corpus frequency, ties broken
// lexicographically.
class Vocab {
 public:
  // max_size counts the reserved ids. Tokens beyond it map to [UNK].
  static Vocab Build(std::string_view corpus, std::size_t max_size);
  // One non-reserved token per line; line k (0-based) has id k + 5.
  static Vocab Load(std::istream& is);
  void Save(std::ostream& os) const;

  std::size_t size() const { return tokens_.size(); }
  int Id(std::string_view token) const;
  const std::string& Token(int id) const { return tokens_.at(id); }
  std::vector<int> Encode(std::string_view text) const;

 private:
  Vocab();
  void Add(std::string token);

  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> tokens_;
};

Vocab BuildVocab(std::string_view corpus, std::size_t max_size);

std::vector<std::string> Tokenize(std::string_view text);
// Documents are separated by one or more blank lines.
std::vector<std::string> SplitDocuments(std::string_view text);
std::vector<std::vector<int>> EncodeDocuments(std::string_view text,
                                              const Vocab& vocab);
// Reads a whole UTF-8 text file; IoError names the path on failure.
std::string ReadTextFile(const std::string& path);

struct PackedSequence {
  std::vector<int> ids;
  std::vector<std::uint8_t> attention_allowed;  // 0 at padding
  std::size_t doc_index = 0;

  std::size_t length() const { return ids.size(); }
};

// Fills sequences of exactly seq_len tokens from one document at a time:
// a document longer than seq_len is cut into ceil(len / seq_len) pieces and
// the last piece of every document is right-padded. No sequence mixes two
// documents.
std::vector<PackedSequence> PackSequences(
    const std::vector<std::vector<int>>& docs, std::size_t seq_len);

// Right-pads to the next multiple of n with [PAD] (attention disallowed).
PackedSequence PadToBlockMultiple(PackedSequence seq, std::size_t n);

struct MlmRow {
  std::vector<int> input;
  std::vector<int> target;  // original tokens
  std::vector<std::uint8_t> loss_mask;
};

// Selects each maskable position (attention allowed, not [PAD]/[MASK]/
// [CLS]/[SEP]) independently with probability `rate`; selected positions
// become [MASK] 80% of the time, a random non-reserved id 10%, and stay
// unchanged 10%. Returns nullopt when nothing was selected, which callers
// treat as a skipped row. Requires 0 < rate < 1.
std::optional<MlmRow> ApplyMlmMasking(const PackedSequence& seq, double rate,
                                      std::size_t vocab_size,
                                      std::uint64_t seed);

// Row-major [batch x seq_len] training batch.
struct MlmBatch {
  std::size_t batch = 0;
  std::size_t seq_len = 0;
  std::vector<int> input;
  std::vector<int> target;
  std::vector<std::uint8_t> loss_mask;
  std::vector<std::uint8_t> attention_allowed;
  std::uint64_t seed = 0;
  std::size_t skipped = 0;  // rows dropped because nothing was selected
};

// Row r is corrupted with MixSeed(seed, r). Skipped rows are left out.
MlmBatch MakeMlmBatch(std::span<const PackedSequence> seqs, double rate,
                      std::size_t vocab_size, std::uint64_t seed);

struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

// Windows of at most seq_len tokens starting at 0, stride, 2 * stride, ...;
// the last window is clamped to end at the sequence end. Needs
// 0 < stride <= seq_len.
std::vector<Window> SlidingWindowSplit(std::size_t length, std::size_t seq_len,
                                       std::int64_t stride = 128);

// Seeded first-order Markov text over `word_types` words, blank-line
// separated documents.
std::string SyntheticMarkovCorpus(std::uint64_t seed, std::size_t num_docs,
                                  std::size_t words_per_doc,
                                  std::size_t word_types);

// Sequences whose second half repeats the first half; tokens are drawn from
// the non-reserved ids of a vocab_size vocabulary. seq_len must be even.
std::vector<PackedSequence> CopyTaskSequences(std::size_t count,
                                              std::size_t seq_len,
                                              std::size_t vocab_size,
                                              std::uint64_t seed);

}  // namespace blockbert

#endif  // BLOCKBERT_CORE_DATA_H_
