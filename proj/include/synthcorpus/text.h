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

namespace synthcorpus::text {

std::u32string DecodeUtf8(std::string_view s);
std::string EncodeUtf8(std::u32string_view s);
void AppendUtf8(std::string& out, char32_t cp);

// Simple one-to-one lowercase mapping. Covers ASCII, Latin-1, Latin
// Extended-A/B (including the hooked letters used in West African
// orthographies), Greek and Cyrillic.
char32_t FoldCase(char32_t cp);
std::string FoldCase(std::string_view s);

bool IsSpace(char32_t cp);

std::string Trim(std::string_view s);
std::string CollapseWhitespace(std::string_view s);

// Trim, collapse internal whitespace runs to a single space, casefold.
// Used for duplicate detection, split exclusivity and length ratios.
std::string Canonical(std::string_view s);

std::size_t CodePointCount(std::string_view s);
std::vector<std::string> SplitWords(std::string_view s);

// Terminal character (after trimming) is '?' or the Arabic question mark.
bool IsQuestion(std::string_view s);

}  // namespace synthcorpus::text
