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

#include "blockbert/checkpoint.h"

#include <filesystem>
#include <utility>
#include <sstream>

#include <gtest/gtest.h>

#include "blockbert/errors.h"

namespace blockbert {
namespace {

Checkpoint Sample() {
  ModelConfig c;
  c.layers = 1;
  c.hidden = 8;
  c.heads = 2;
  c.seq_len = 6;
  c.blocks = 3;
  c.vocab = 12;
  c.assignment = HeadAssignment::Parse("1:0:1");
  c.dropout = 0.05;
  Checkpoint ck{c, ModelParams::Initialize(c, 4), 77, std::nullopt};
  std::vector<const Tensor*> ptrs;
  for (const auto& n : std::as_const(ck.params).List()) ptrs.push_back(n.tensor);
  AdamState adam = MakeAdamState(ptrs);
  adam.step = 9;
  adam.m[3][1] = 0.125;
  adam.v[5][0] = 1e-300;
  ck.adam = adam;
  return ck;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const Checkpoint a = Sample();
  std::stringstream ss;
  WriteCheckpoint(ss, a);
  const Checkpoint b = ReadCheckpoint(ss);
  EXPECT_EQ(b.config.assignment, a.config.assignment);
  EXPECT_EQ(b.config.dropout, a.config.dropout);
  EXPECT_EQ(b.seed, 77u);
  const auto la = a.params.List(), lb = b.params.List();
  ASSERT_EQ(la.size(), lb.size());
  for (std::size_t i = 0; i < la.size(); ++i) EXPECT_EQ(*la[i].tensor, *lb[i].tensor);
  ASSERT_TRUE(b.adam.has_value());
  EXPECT_EQ(b.adam->step, 9u);
  EXPECT_EQ(b.adam->m[3][1], 0.125);
  EXPECT_EQ(b.adam->v[5][0], 1e-300);
}

TEST(Checkpoint, LayoutStartsWithMagicAndVersion) {
  std::stringstream ss;
  WriteCheckpoint(ss, Sample());
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "BBLK");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  // First config field is the layer count, little-endian u32.
  EXPECT_EQ(bytes[8], 1);
}

TEST(Checkpoint, RejectsCorruptInput) {
  std::stringstream bad_magic("BBLX\x01\x00\x00\x00");
  EXPECT_THROW(ReadCheckpoint(bad_magic), FormatError);
  std::stringstream ss;
  WriteCheckpoint(ss, Sample());
  std::string bytes = ss.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(ReadCheckpoint(truncated), FormatError);
  bytes[4] = 9;
  std::stringstream version(bytes);
  EXPECT_THROW(ReadCheckpoint(version), FormatError);
}

TEST(Checkpoint, FileErrorsNamePath) {
  try {
    LoadCheckpoint("/nonexistent/x.bblk");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/x.bblk"), std::string::npos);
  }
  const auto path = std::filesystem::temp_directory_path() / "blockbert_ckpt_test.bblk";
  SaveCheckpoint(path.string(), Sample());
  EXPECT_EQ(LoadCheckpoint(path.string()).adam->step, 9u);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace blockbert
