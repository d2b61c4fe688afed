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

#ifndef BLOCKBERT_TOOLS_CONFIG_FILE_H_
#define BLOCKBERT_TOOLS_CONFIG_FILE_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace blockbert::cli {

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

// `key = value` per line; `#` starts a comment; blank lines are skipped.
// Malformed lines and repeated keys throw ArgumentError naming `source`.
std::vector<ConfigEntry> ParseConfigText(std::string_view text,
                                         const std::string& source);
// Throws IoError when the file cannot be read.
std::vector<ConfigEntry> ReadConfigFile(const std::string& path);

}  // namespace blockbert::cli

#endif  // BLOCKBERT_TOOLS_CONFIG_FILE_H_
