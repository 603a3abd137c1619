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

#include <condition_variable>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "synthcorpus/audio_io.h"

namespace synthcorpus::clients {

enum class EndpointKind { kLlm, kTts, kAsr };

std::string_view EndpointKindName(EndpointKind kind);
EndpointKind ParseEndpointKind(std::string_view name);

struct EndpointConfig {
  EndpointKind kind = EndpointKind::kLlm;
  std::string base_url;
  std::string model_id;
  // Name of the environment variable holding the bearer token. The token
  // itself is read at request time and never stored or serialized.
  std::string auth_token_env;
  double timeout_seconds = 60.0;
  int max_parallel = 4;
  int max_retries = 3;
  double backoff_base_seconds = 1.0;
  double backoff_cap_seconds = 30.0;

  // Throws ValidationError on max_parallel < 1, timeout <= 0, etc.
  void Validate() const;
};

nlohmann::json ToJson(const EndpointConfig& cfg);
EndpointConfig EndpointConfigFromJson(const nlohmann::json& j);

struct ChatRequest {
  std::string system_prompt;
  // (user, assistant) exchanges placed before the real prompt.
  std::vector<std::pair<std::string, std::string>> few_shot;
  std::string user_prompt;
  double temperature = 0.7;
  std::string batch_tag;
};

// Request body as sent on the wire: {"model", "messages", "temperature"}.
nlohmann::json ChatBody(const std::string& model, const ChatRequest& req);

// Bounded in-flight counter shared by all calls through one client.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(int limit) : limit_(limit) {}

  void Acquire();
  void Release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int limit_;
  int in_flight_ = 0;
};

// One client per endpoint. Safe for concurrent use; at most
// cfg.max_parallel requests are in flight at any time.
class ModelClient {
 public:
  explicit ModelClient(EndpointConfig cfg);

  const EndpointConfig& config() const { return cfg_; }

  // Returns the assistant message body verbatim.
  std::string CompleteChat(const ChatRequest& req);
  Audio SynthesizeSpeech(std::string_view text);
  // An empty transcript is a legal result.
  std::string Transcribe(const Audio& audio);

 private:
  nlohmann::json PostJson(const std::string& route, const nlohmann::json& body,
                          const std::string& batch_tag = {});
  void RequireKind(EndpointKind kind) const;

  EndpointConfig cfg_;
  ConcurrencyLimiter limiter_;
};

// Backoff before retry |attempt| (0-based): min(cap, base * 2^attempt)
// scaled by a jitter factor in [0.5, 1].
double BackoffSeconds(const EndpointConfig& cfg, int attempt, double jitter_unit);

}  // namespace synthcorpus::clients
