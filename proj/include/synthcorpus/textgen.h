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

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "synthcorpus/error.h"
#include "synthcorpus/model_clients.h"

namespace synthcorpus::textgen {

struct Language {
  std::string tag;   // BCP-47 style, e.g. "ha"
  std::string name;  // display name used in prompts, e.g. "Hausa"
};

// 17 development-goal themes followed by 17 general topic themes.
const std::vector<std::string>& DefaultThemes();

// Two (user, assistant) exchanges demonstrating the JSON contract.
std::vector<std::pair<std::string, std::string>> DefaultFewShot();

struct GenerationSpec {
  Language language;
  std::vector<std::string> themes = DefaultThemes();
  int sentences_per_request = 10;
  double question_share_target = 0.25;
  int total_target = 0;
  clients::EndpointConfig model;
  std::uint64_t seed = 0;
  double temperature = 0.7;
  std::vector<std::pair<std::string, std::string>> few_shot = DefaultFewShot();
  std::string batch_prefix = "batch";
  // Transport/provider failures tolerated before aborting.
  int failure_budget = 10;
  // Hard cap on requests; 0 means 4x the number needed plus one per theme.
  int max_requests = 0;
  // Fixed creation time for reproducible runs; wall clock when unset.
  std::optional<std::int64_t> created_at_ms;

  void Validate() const;
};

struct SentencePair {
  std::string id;
  std::string target_text;
  std::string english_text;
  std::string theme;
  std::string model_id;
  std::string batch_id;
  bool is_question = false;
  std::string created_at;

  bool operator==(const SentencePair&) const = default;
};

nlohmann::json ToJson(const SentencePair& p);
SentencePair SentencePairFromJson(const nlohmann::json& j);

std::vector<SentencePair> ReadPairsJsonl(const std::string& path);
void WritePairsJsonl(const std::string& path, const std::vector<SentencePair>& pairs);

// Serializes pairs in the generation wire schema
// {"sentences":[{"target","english"}...]}.
std::string SerializeGeneration(const std::vector<SentencePair>& pairs);

// Throws InvalidInput when |theme| is not one of spec.themes or n < 1.
clients::ChatRequest BuildPrompt(const GenerationSpec& spec, std::string_view theme, int n);

// Extracts the first JSON object in |raw| with the generation schema.
// Leading/trailing prose and code fences are tolerated. Entries with an
// empty target are dropped. id/created_at are left empty.
std::vector<SentencePair> ParseGeneration(std::string_view raw, std::string_view theme,
                                          std::string_view model_id,
                                          std::string_view batch_id);

struct GenerationReport {
  int requests = 0;
  std::map<std::string, int> requests_per_theme;
  std::map<std::string, int> pairs_per_theme;
  int parse_failures = 0;
  int schema_failures = 0;
  int transport_failures = 0;
  int duplicates = 0;
  int total = 0;
  int questions = 0;
};

nlohmann::json ToJson(const GenerationReport& r);

struct GenerationResult {
  std::vector<SentencePair> pairs;
  GenerationReport report;
};

// Raised when transport failures exceed the budget; carries what was
// collected so far so callers can persist it.
class GenerationAborted : public Error {
 public:
  GenerationAborted(const std::string& message, GenerationResult partial)
      : Error(ErrorKind::kRetryExhausted, message), partial_(std::move(partial)) {}

  const GenerationResult& partial() const noexcept { return partial_; }

 private:
  GenerationResult partial_;
};

GenerationResult GenerateCorpus(const GenerationSpec& spec, clients::ModelClient& client);

// 26-character Crockford base32 ULID.
std::string MakeUlid(std::int64_t unix_ms, std::uint64_t rand_hi, std::uint64_t rand_lo);
std::string FormatTimestamp(std::int64_t unix_ms);

}  // namespace synthcorpus::textgen
