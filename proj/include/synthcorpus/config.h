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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "synthcorpus/asr_eval.h"
#include "synthcorpus/audio_augment.h"
#include "synthcorpus/corpus.h"
#include "synthcorpus/error.h"
#include "synthcorpus/model_clients.h"
#include "synthcorpus/textgen.h"
#include "synthcorpus/tts_qc.h"

namespace synthcorpus::config {

// Raised for missing or mistyped keys; the message names the dotted path.
class ConfigError : public Error {
 public:
  ConfigError(std::string key_path, const std::string& problem);

  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

inline constexpr std::string_view kDefaultEnvPrefix = "SYNTHCORPUS_";

// Whole-pipeline configuration: one JSON document with a section per stage.
//
//   {"seed": 7,
//    "endpoints": {"llm": {...}, "tts": {...}, "asr": {...}},
//    "generation": {...}, "uniq_curve": {...}, "filter": {...},
//    "rebalance": {...}, "augment": {...}, "split": {...}, "mix": {...},
//    "normalizer": {...}, "eval": {...}, "ratings": {...}, "review": {...}}
class RunConfig {
 public:
  RunConfig() = default;
  explicit RunConfig(nlohmann::json root, std::string env_prefix = std::string(kDefaultEnvPrefix));
  static RunConfig FromFile(const std::string& path,
                            std::string env_prefix = std::string(kDefaultEnvPrefix));

  const nlohmann::json& raw() const { return root_; }

  std::uint64_t root_seed() const { return root_seed_; }
  void set_root_seed(std::uint64_t seed) { root_seed_ = seed; }
  // "<stage>.seed" when present, otherwise DeriveSeed(root_seed, stage).
  std::uint64_t StageSeed(std::string_view stage) const;

  bool Has(std::string_view path) const;
  // Throws ConfigError naming |path| when absent.
  const nlohmann::json& At(std::string_view path) const;
  const nlohmann::json* Find(std::string_view path) const;

  template <typename T>
  T Require(std::string_view path) const {
    const nlohmann::json& v = At(path);
    try {
      return v.get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string(path), "has the wrong type");
    }
  }

  template <typename T>
  T Get(std::string_view path, T fallback) const {
    return Has(path) ? Require<T>(path) : fallback;
  }

  // endpoints.<kind>. Fields may be overridden by <prefix><KIND>_BASE_URL,
  // _MODEL_ID, _AUTH_TOKEN_ENV. Without auth_token_env the token is read
  // from <prefix><KIND>_TOKEN.
  clients::EndpointConfig Endpoint(clients::EndpointKind kind) const;

  textgen::GenerationSpec Generation() const;
  tts_qc::FilterPolicy Filter() const;
  augment::AugmentPolicy Augment() const;
  corpus::SplitSpec Split() const;
  corpus::MixSpec Mix() const;
  asr_eval::Normalizer Normalizer() const;

 private:
  nlohmann::json root_ = nlohmann::json::object();
  std::string env_prefix_ = std::string(kDefaultEnvPrefix);
  std::uint64_t root_seed_ = 0;
};

// Reads the reproducible build time from SOURCE_DATE_EPOCH (seconds), if set.
std::optional<std::int64_t> SourceDateEpochMs();

}  // namespace synthcorpus::config
