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

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "blockbert/errors.h"
#include "blockbert/random.h"

namespace blockbert {
namespace {

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool IsSpecial(int id) {
  return id == kPadId || id == kMaskId || id == kClsId || id == kSepId;
}

}  // namespace

Vocab::Vocab() {
  for (const char* t : {"[PAD]", "[MASK]", "[CLS]", "[SEP]", "[UNK]"}) Add(t);
}

void Vocab::Add(std::string token) {
  ids_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocab Vocab::Build(std::string_view corpus, std::size_t max_size) {
  const std::vector<std::string> tokens = Tokenize(corpus);
  if (tokens.empty()) throw ArgumentError("cannot build a vocab from an empty corpus");
  if (max_size < static_cast<std::size_t>(kNumReservedIds)) {
    throw ArgumentError("vocab size must cover the " +
                        std::to_string(kNumReservedIds) + " reserved ids");
  }
  std::map<std::string, std::size_t> counts;
  for (const std::string& t : tokens) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab vocab;
  for (auto& [token, count] : ranked) {
    if (vocab.size() >= max_size) break;
    if (vocab.ids_.count(token)) continue;
    vocab.Add(token);
  }
  return vocab;
}

Vocab Vocab::Load(std::istream& is) {
  Vocab vocab;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw FormatError("vocab file has an empty line");
    if (vocab.ids_.count(line)) {
      throw FormatError("vocab file repeats token '" + line + "'");
    }
    vocab.Add(line);
  }
  return vocab;
}

void Vocab::Save(std::ostream& os) const {
  for (std::size_t i = kNumReservedIds; i < tokens_.size(); ++i)
    os << tokens_[i] << '\n';
}

int Vocab::Id(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

std::vector<int> Vocab::Encode(std::string_view text) const {
  std::vector<int> ids;
  for (const std::string& t : Tokenize(text)) ids.push_back(Id(t));
  return ids;
}

Vocab BuildVocab(std::string_view corpus, std::size_t max_size) {
  return Vocab::Build(corpus, max_size);
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSpace(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !IsSpace(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::vector<std::string> SplitDocuments(std::string_view text) {
  std::vector<std::string> docs;
  std::string current;
  std::istringstream is{std::string(text)};
  std::string line;
  auto flush = [&] {
    if (!Tokenize(current).empty()) docs.push_back(current);
    current.clear();
  };
  while (std::getline(is, line)) {
    if (Tokenize(line).empty()) {
      flush();
    } else {
      current += line;
      current += '\n';
    }
  }
  flush();
  return docs;
}

std::vector<std::vector<int>> EncodeDocuments(std::string_view text,
                                              const Vocab& vocab) {
  std::vector<std::vector<int>> out;
  for (const std::string& doc : SplitDocuments(text))
    out.push_back(vocab.Encode(doc));
  return out;
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return ss.str();
}

std::vector<PackedSequence> PackSequences(
    const std::vector<std::vector<int>>& docs, std::size_t seq_len) {
  if (seq_len < 2) throw ArgumentError("pack_sequences needs N >= 2");
  std::vector<PackedSequence> out;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const std::vector<int>& doc = docs[d];
    for (std::size_t start = 0; start < doc.size(); start += seq_len) {
      const std::size_t end = std::min(doc.size(), start + seq_len);
      PackedSequence seq;
      seq.doc_index = d;
      seq.ids.assign(doc.begin() + start, doc.begin() + end);
      seq.attention_allowed.assign(seq.ids.size(), 1);
      seq.ids.resize(seq_len, kPadId);
      seq.attention_allowed.resize(seq_len, 0);
      out.push_back(std::move(seq));
    }
  }
  return out;
}

PackedSequence PadToBlockMultiple(PackedSequence seq, std::size_t n) {
  if (n == 0) throw ArgumentError("pad_to_block_multiple needs n >= 1");
  if (seq.attention_allowed.size() != seq.ids.size()) {
    seq.attention_allowed.resize(seq.ids.size(), 1);
  }
  const std::size_t padded = (seq.ids.size() + n - 1) / n * n;
  seq.ids.resize(padded, kPadId);
  seq.attention_allowed.resize(padded, 0);
  return seq;
}

std::optional<MlmRow> ApplyMlmMasking(const PackedSequence& seq, double rate,
                                      std::size_t vocab_size,
                                      std::uint64_t seed) {
  if (!(rate > 0.0 && rate < 1.0)) {
    throw ArgumentError("mlm masking rate must be in (0, 1)");
  }
  Rng rng(seed);
  MlmRow row{seq.ids, seq.ids, std::vector<std::uint8_t>(seq.ids.size(), 0)};
  const std::size_t random_range =
      vocab_size > static_cast<std::size_t>(kNumReservedIds)
          ? vocab_size - kNumReservedIds
          : 0;
  std::size_t selected = 0;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    const bool allowed =
        i >= seq.attention_allowed.size() || seq.attention_allowed[i] != 0;
    if (!allowed || IsSpecial(seq.ids[i])) continue;
    if (Uniform01(rng) >= rate) continue;
    ++selected;
    row.loss_mask[i] = 1;
    const double action = Uniform01(rng);
    if (action < 0.8 || random_range == 0) {
      row.input[i] = kMaskId;
    } else if (action < 0.9) {
      row.input[i] =
          kNumReservedIds + static_cast<int>(UniformIndex(rng, random_range));
    }
  }
  if (selected == 0) return std::nullopt;
  return row;
}

MlmBatch MakeMlmBatch(std::span<const PackedSequence> seqs, double rate,
                      std::size_t vocab_size, std::uint64_t seed) {
  MlmBatch batch;
  batch.seed = seed;
  for (std::size_t r = 0; r < seqs.size(); ++r) {
    const PackedSequence& seq = seqs[r];
    if (batch.seq_len == 0) batch.seq_len = seq.length();
    if (seq.length() != batch.seq_len) {
      throw ArgumentError("batch rows must share one sequence length");
    }
    std::optional<MlmRow> row =
        ApplyMlmMasking(seq, rate, vocab_size, MixSeed(seed, r));
    if (!row) {
      ++batch.skipped;
      continue;
    }
    batch.input.insert(batch.input.end(), row->input.begin(), row->input.end());
    batch.target.insert(batch.target.end(), row->target.begin(),
                        row->target.end());
    batch.loss_mask.insert(batch.loss_mask.end(), row->loss_mask.begin(),
                           row->loss_mask.end());
    if (seq.attention_allowed.size() == seq.length()) {
      batch.attention_allowed.insert(batch.attention_allowed.end(),
                                     seq.attention_allowed.begin(),
                                     seq.attention_allowed.end());
    } else {
      batch.attention_allowed.insert(batch.attention_allowed.end(),
                                     seq.length(), 1);
    }
    ++batch.batch;
  }
  return batch;
}

std::vector<Window> SlidingWindowSplit(std::size_t length, std::size_t seq_len,
                                       std::int64_t stride) {
  if (stride <= 0) throw ArgumentError("sliding window stride must be > 0");
  if (seq_len == 0 || static_cast<std::size_t>(stride) > seq_len) {
    throw ArgumentError("sliding window stride must not exceed N");
  }
  const std::size_t step = static_cast<std::size_t>(stride);
  std::vector<Window> out;
  if (length <= seq_len) {
    out.push_back({0, length});
    return out;
  }
  for (std::size_t start = 0;; start += step) {
    if (start + seq_len >= length) {
      out.push_back({length - seq_len, length});
      break;
    }
    out.push_back({start, start + seq_len});
  }
  return out;
}

std::string SyntheticMarkovCorpus(std::uint64_t seed, std::size_t num_docs,
                                  std::size_t words_per_doc,
                                  std::size_t word_types) {
  if (word_types < 2) throw ArgumentError("markov corpus needs >= 2 word types");
  Rng rng(seed);
  // Each word has a handful of likely successors.
  constexpr std::size_t kSuccessors = 4;
  std::vector<std::array<std::size_t, kSuccessors>> next(word_types);
  for (auto& successors : next)
    for (std::size_t& s : successors) s = UniformIndex(rng, word_types);
  std::string text;
  for (std::size_t d = 0; d < num_docs; ++d) {
    if (d) text += "\n\n";
    std::size_t word = UniformIndex(rng, word_types);
    for (std::size_t w = 0; w < words_per_doc; ++w) {
      if (w) text += ' ';
      text += 'w';
      text += std::to_string(word);
      // 10% uniform restarts keep every word reachable.
      word = Uniform01(rng) < 0.1 ? UniformIndex(rng, word_types)
                                  : next[word][UniformIndex(rng, kSuccessors)];
    }
  }
  text += '\n';
  return text;
}

std::vector<PackedSequence> CopyTaskSequences(std::size_t count,
                                              std::size_t seq_len,
                                              std::size_t vocab_size,
                                              std::uint64_t seed) {
  if (seq_len < 2 || seq_len % 2 != 0) {
    throw ArgumentError("copy task needs an even sequence length");
  }
  if (vocab_size <= static_cast<std::size_t>(kNumReservedIds)) {
    throw ArgumentError("copy task needs non-reserved vocabulary ids");
  }
  Rng rng(seed);
  const std::size_t half = seq_len / 2;
  const std::size_t range = vocab_size - kNumReservedIds;
  std::vector<PackedSequence> out(count);
  for (std::size_t s = 0; s < count; ++s) {
    PackedSequence& seq = out[s];
    seq.doc_index = s;
    seq.ids.resize(seq_len);
    seq.attention_allowed.assign(seq_len, 1);
    for (std::size_t i = 0; i < half; ++i) {
      seq.ids[i] = kNumReservedIds + static_cast<int>(UniformIndex(rng, range));
      seq.ids[i + half] = seq.ids[i];
    }
  }
  return out;
}

}  // namespace blockbert
