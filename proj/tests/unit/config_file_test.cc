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

#include "blockbert/config_file.h"

#include <gtest/gtest.h>

#include "blockbert/errors.h"

namespace blockbert::cli {
namespace {

TEST(ConfigFile, ParsesKeysValuesAndComments) {
  const auto entries = ParseConfigText(
      "# header\n\nseq-len = 64\n  blocks=2   # trailing\nperm = 2,1\r\n",
      "a.cfg");
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_EQ(entries[0].key, "seq-len");
  EXPECT_EQ(entries[0].value, "64");
  EXPECT_EQ(entries[0].line, 3u);
  EXPECT_EQ(entries[1].value, "2");
  EXPECT_EQ(entries[2].value, "2,1");
}

TEST(ConfigFile, RejectsMalformedLines) {
  EXPECT_THROW(ParseConfigText("seq-len 64\n", "a.cfg"), ArgumentError);
  EXPECT_THROW(ParseConfigText(" = 3\n", "a.cfg"), ArgumentError);
  EXPECT_THROW(ParseConfigText("a = 1\na = 2\n", "a.cfg"), ArgumentError);
  try {
    ParseConfigText("\n\nbroken\n", "run.cfg");
    FAIL();
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:3"), std::string::npos);
  }
}

TEST(ConfigFile, MissingFileNamesThePath) {
  try {
    ReadConfigFile("/nonexistent/run.cfg");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/run.cfg"),
              std::string::npos);
  }
}

}  // namespace
}  // namespace blockbert::cli
