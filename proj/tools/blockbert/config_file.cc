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

#include <set>

#include "blockbert/data.h"
#include "blockbert/errors.h"

namespace blockbert::cli {
namespace {

std::string_view Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::vector<ConfigEntry> ParseConfigText(std::string_view text,
                                         const std::string& source) {
  std::vector<ConfigEntry> entries;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) {
      throw ArgumentError(where + ": expected `key = value`");
    }
    ConfigEntry e{std::string(Trim(line.substr(0, eq))),
                  std::string(Trim(line.substr(eq + 1))), line_no};
    if (e.key.empty()) throw ArgumentError(where + ": empty key");
    if (!seen.insert(e.key).second) {
      throw ArgumentError(where + ": duplicate key '" + e.key + "'");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ConfigEntry> ReadConfigFile(const std::string& path) {
  return ParseConfigText(ReadTextFile(path), path);
}

}  // namespace blockbert::cli
