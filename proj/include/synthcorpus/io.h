// Copyright 2026 The synthcorpus Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace synthcorpus::io {

std::string ReadFile(const std::string& path);
// Creates parent directories as needed.
void WriteFile(const std::string& path, std::string_view contents);

std::vector<nlohmann::json> ReadJsonLines(const std::string& path);
std::string ToJsonLines(const std::vector<nlohmann::json>& rows);

// Lines of a plain text file, without trailing '\r'.
std::vector<std::string> ReadLines(const std::string& path);

}  // namespace synthcorpus::io
