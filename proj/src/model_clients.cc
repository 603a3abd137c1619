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

#include "synthcorpus/model_clients.h"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "synthcorpus/error.h"

namespace synthcorpus::clients {

using nlohmann::json;

std::string_view EndpointKindName(EndpointKind kind) {
  switch (kind) {
    case EndpointKind::kLlm: return "llm";
    case EndpointKind::kTts: return "tts";
    case EndpointKind::kAsr: return "asr";
  }
  return "llm";
}

EndpointKind ParseEndpointKind(std::string_view name) {
  if (name == "llm") return EndpointKind::kLlm;
  if (name == "tts") return EndpointKind::kTts;
  if (name == "asr") return EndpointKind::kAsr;
  throw ValidationError({"kind"});
}

void EndpointConfig::Validate() const {
  std::vector<std::string> bad;
  if (base_url.empty()) bad.emplace_back("base_url");
  if (!(timeout_seconds > 0)) bad.emplace_back("timeout");
  if (max_parallel < 1) bad.emplace_back("max_parallel");
  if (max_retries < 0) bad.emplace_back("max_retries");
  if (backoff_base_seconds < 0) bad.emplace_back("backoff_base");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

json ToJson(const EndpointConfig& cfg) {
  return json{{"kind", EndpointKindName(cfg.kind)},
              {"base_url", cfg.base_url},
              {"model_id", cfg.model_id},
              {"auth_token_env", cfg.auth_token_env},
              {"timeout", cfg.timeout_seconds},
              {"max_parallel", cfg.max_parallel},
              {"max_retries", cfg.max_retries},
              {"backoff_base", cfg.backoff_base_seconds},
              {"backoff_cap", cfg.backoff_cap_seconds}};
}

EndpointConfig EndpointConfigFromJson(const json& j) {
  EndpointConfig cfg;
  cfg.kind = ParseEndpointKind(j.at("kind").get<std::string>());
  cfg.base_url = j.at("base_url").get<std::string>();
  cfg.model_id = j.value("model_id", "");
  cfg.auth_token_env = j.value("auth_token_env", "");
  cfg.timeout_seconds = j.value("timeout", cfg.timeout_seconds);
  cfg.max_parallel = j.value("max_parallel", cfg.max_parallel);
  cfg.max_retries = j.value("max_retries", cfg.max_retries);
  cfg.backoff_base_seconds = j.value("backoff_base", cfg.backoff_base_seconds);
  cfg.backoff_cap_seconds = j.value("backoff_cap", cfg.backoff_cap_seconds);
  cfg.Validate();
  return cfg;
}

json ChatBody(const std::string& model, const ChatRequest& req) {
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
  for (const auto& [user, assistant] : req.few_shot) {
    messages.push_back({{"role", "user"}, {"content", user}});
    messages.push_back({{"role", "assistant"}, {"content", assistant}});
  }
  messages.push_back({{"role", "user"}, {"content", req.user_prompt}});
  return json{{"model", model}, {"messages", messages}, {"temperature", req.temperature}};
}

void ConcurrencyLimiter::Acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return in_flight_ < limit_; });
  ++in_flight_;
}

void ConcurrencyLimiter::Release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

double BackoffSeconds(const EndpointConfig& cfg, int attempt, double jitter_unit) {
  const double raw = cfg.backoff_base_seconds * std::pow(2.0, attempt);
  const double capped = std::min(cfg.backoff_cap_seconds, raw);
  return capped * (0.5 + 0.5 * std::clamp(jitter_unit, 0.0, 1.0));
}

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

SplitUrl SplitBaseUrl(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start =
      url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  SplitUrl out;
  if (path_start == std::string::npos) {
    out.origin = url;
  } else {
    out.origin = url.substr(0, path_start);
    out.prefix = url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

class LimiterGuard {
 public:
  explicit LimiterGuard(ConcurrencyLimiter& l) : l_(l) { l_.Acquire(); }
  ~LimiterGuard() { l_.Release(); }
  LimiterGuard(const LimiterGuard&) = delete;
  LimiterGuard& operator=(const LimiterGuard&) = delete;

 private:
  ConcurrencyLimiter& l_;
};

double JitterUnit() {
  thread_local std::minstd_rand jitter_rng(std::random_device{}());
  return std::uniform_real_distribution<double>(0.0, 1.0)(jitter_rng);
}

}  // namespace

ModelClient::ModelClient(EndpointConfig cfg)
    : cfg_(std::move(cfg)), limiter_(cfg_.max_parallel) {
  cfg_.Validate();
}

void ModelClient::RequireKind(EndpointKind kind) const {
  if (cfg_.kind != kind) {
    Throw(ErrorKind::kInvalidInput,
          fmt::format("endpoint '{}' is {}, expected {}", cfg_.base_url,
                      EndpointKindName(cfg_.kind), EndpointKindName(kind)));
  }
}

json ModelClient::PostJson(const std::string& route, const json& body,
                           const std::string& batch_tag) {
  const SplitUrl url = SplitBaseUrl(cfg_.base_url);
  const std::string path = url.prefix + route;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!cfg_.auth_token_env.empty()) {
    if (const char* token = std::getenv(cfg_.auth_token_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  if (!batch_tag.empty()) headers.emplace("X-Batch-Tag", batch_tag);

  const auto timeout = std::chrono::duration<double>(cfg_.timeout_seconds);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      const double wait = BackoffSeconds(cfg_, attempt - 1, JitterUnit());
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    httplib::Result res;
    {
      LimiterGuard guard(limiter_);
      httplib::Client cli(url.origin);
      cli.set_connection_timeout(usec.count() / 1000000, usec.count() % 1000000);
      cli.set_read_timeout(usec.count() / 1000000, usec.count() % 1000000);
      cli.set_write_timeout(usec.count() / 1000000, usec.count() % 1000000);
      res = cli.Post(path, headers, payload, "application/json");
    }
    if (!res) {
      last_error = httplib::to_string(res.error());
      spdlog::debug("{}{}: transport error '{}' (attempt {})", cfg_.base_url, route,
                    last_error, attempt + 1);
      continue;
    }
    const int status = res->status;
    if (status >= 200 && status < 300) {
      try {
        return json::parse(res->body);
      } catch (const json::parse_error&) {
        throw ParseFailure("provider response is not JSON", res->body);
      }
    }
    if (status >= 500 || status == 429 || status == 408) {
      last_error = fmt::format("HTTP {}", status);
      spdlog::debug("{}{}: {} (attempt {})", cfg_.base_url, route, last_error, attempt + 1);
      continue;
    }
    throw ProviderRejected(status, res->body);
  }
  Throw(ErrorKind::kRetryExhausted,
        fmt::format("{}{} failed after {} attempts: {}", cfg_.base_url, route,
                    cfg_.max_retries + 1, last_error));
}

std::string ModelClient::CompleteChat(const ChatRequest& req) {
  RequireKind(EndpointKind::kLlm);
  const json resp = PostJson("/chat", ChatBody(cfg_.model_id, req), req.batch_tag);
  if (!resp.is_object() || !resp.contains("content") || !resp["content"].is_string()) {
    throw ParseFailure("chat response lacks string 'content'", resp.dump());
  }
  return resp["content"].get<std::string>();
}

Audio ModelClient::SynthesizeSpeech(std::string_view text) {
  RequireKind(EndpointKind::kTts);
  if (text.empty()) Throw(ErrorKind::kInvalidInput, "cannot synthesize empty text");
  const json resp = PostJson("/tts", json{{"model", cfg_.model_id}, {"text", text}});
  if (!resp.is_object() || !resp.contains("audio_b64") || !resp.contains("sample_rate")) {
    throw ParseFailure("tts response lacks 'audio_b64'/'sample_rate'", resp.dump());
  }
  const std::string bytes = base64::Decode(resp["audio_b64"].get<std::string>());
  Audio audio;
  if (bytes.rfind("RIFF", 0) == 0) {
    audio = wav::Decode(bytes);
  } else {
    audio.sample_rate = resp["sample_rate"].get<int>();
    audio.samples.resize(bytes.size() / 2);
    for (std::size_t i = 0; i < audio.samples.size(); ++i) {
      const auto lo = static_cast<unsigned char>(bytes[2 * i]);
      const auto hi = static_cast<unsigned char>(bytes[2 * i + 1]);
      const auto raw = static_cast<std::int16_t>(lo | (hi << 8));
      audio.samples[i] = static_cast<float>(raw) / 32768.0f;
    }
  }
  if (audio.samples.empty() || audio.sample_rate <= 0) {
    throw ParseFailure("tts response carries no audio", resp.dump().substr(0, 200));
  }
  return audio;
}

std::string ModelClient::Transcribe(const Audio& audio) {
  RequireKind(EndpointKind::kAsr);
  if (audio.samples.empty()) Throw(ErrorKind::kInvalidInput, "cannot transcribe empty audio");
  std::string pcm;
  pcm.reserve(audio.samples.size() * 2);
  for (float s : audio.samples) {
    const auto q = static_cast<std::int16_t>(
        std::clamp(std::lround(std::clamp(s, -1.0f, 1.0f) * 32768.0f), -32768L, 32767L));
    pcm.push_back(static_cast<char>(q & 0xFF));
    pcm.push_back(static_cast<char>((q >> 8) & 0xFF));
  }
  const json resp = PostJson("/asr", json{{"model", cfg_.model_id},
                                          {"audio_b64", base64::Encode(pcm)},
                                          {"sample_rate", audio.sample_rate}});
  if (!resp.is_object() || !resp.contains("text") || !resp["text"].is_string()) {
    throw ParseFailure("asr response lacks string 'text'", resp.dump());
  }
  return resp["text"].get<std::string>();
}

}  // namespace synthcorpus::clients
