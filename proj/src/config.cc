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

#include "synthcorpus/config.h"

#include <cctype>
#include <cstdlib>

#include <fmt/format.h>

#include "synthcorpus/io.h"
#include "synthcorpus/rng.h"

namespace synthcorpus::config {

using nlohmann::json;

ConfigError::ConfigError(std::string key_path, const std::string& problem)
    : Error(ErrorKind::kConfig, fmt::format("config key '{}' {}", key_path, problem)),
      key_path_(std::move(key_path)) {}

RunConfig::RunConfig(json root, std::string env_prefix)
    : root_(std::move(root)), env_prefix_(std::move(env_prefix)) {
  if (!root_.is_object()) throw ConfigError("<root>", "must be a JSON object");
  root_seed_ = Get<std::uint64_t>("seed", 0);
}

RunConfig RunConfig::FromFile(const std::string& path, std::string env_prefix) {
  json j;
  try {
    j = json::parse(io::ReadFile(path));
  } catch (const json::exception& e) {
    Throw(ErrorKind::kConfig, fmt::format("{}: {}", path, e.what()));
  }
  return RunConfig(std::move(j), std::move(env_prefix));
}

const json* RunConfig::Find(std::string_view path) const {
  const json* cur = &root_;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot = path.find('.', start);
    const std::string key(path.substr(start, dot == std::string_view::npos ? path.npos : dot - start));
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(key);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return cur;
}

bool RunConfig::Has(std::string_view path) const {
  const json* v = Find(path);
  return v != nullptr && !v->is_null();
}

const json& RunConfig::At(std::string_view path) const {
  const json* v = Find(path);
  if (v == nullptr || v->is_null()) throw ConfigError(std::string(path), "is missing");
  return *v;
}

std::uint64_t RunConfig::StageSeed(std::string_view stage) const {
  const std::string key = std::string(stage) + ".seed";
  if (Has(key)) return Require<std::uint64_t>(key);
  return DeriveSeed(root_seed_, stage);
}

namespace {

std::string Upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::optional<std::string> Env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

}  // namespace

clients::EndpointConfig RunConfig::Endpoint(clients::EndpointKind kind) const {
  const std::string name(clients::EndpointKindName(kind));
  const std::string base = "endpoints." + name;
  const std::string env = env_prefix_ + Upper(name);
  clients::EndpointConfig cfg;
  cfg.kind = kind;
  cfg.base_url = Env(env + "_BASE_URL").value_or(std::string());
  if (cfg.base_url.empty()) cfg.base_url = Require<std::string>(base + ".base_url");
  cfg.model_id = Env(env + "_MODEL_ID").value_or(Get<std::string>(base + ".model_id", ""));
  cfg.auth_token_env =
      Env(env + "_AUTH_TOKEN_ENV").value_or(Get<std::string>(base + ".auth_token_env", env + "_TOKEN"));
  cfg.timeout_seconds = Get<double>(base + ".timeout", cfg.timeout_seconds);
  cfg.max_parallel = Get<int>(base + ".max_parallel", cfg.max_parallel);
  cfg.max_retries = Get<int>(base + ".max_retries", cfg.max_retries);
  cfg.backoff_base_seconds = Get<double>(base + ".backoff_base", cfg.backoff_base_seconds);
  cfg.backoff_cap_seconds = Get<double>(base + ".backoff_cap", cfg.backoff_cap_seconds);
  cfg.Validate();
  return cfg;
}

textgen::GenerationSpec RunConfig::Generation() const {
  textgen::GenerationSpec spec;
  spec.language.tag = Require<std::string>("generation.language.tag");
  spec.language.name = Require<std::string>("generation.language.name");
  spec.total_target = Require<int>("generation.total_target");
  spec.themes = Get("generation.themes", spec.themes);
  spec.sentences_per_request = Get("generation.sentences_per_request", spec.sentences_per_request);
  spec.question_share_target = Get("generation.question_share_target", spec.question_share_target);
  spec.temperature = Get("generation.temperature", spec.temperature);
  spec.batch_prefix = Get("generation.batch_prefix", spec.batch_prefix);
  spec.failure_budget = Get("generation.failure_budget", spec.failure_budget);
  spec.max_requests = Get("generation.max_requests", spec.max_requests);
  if (Has("generation.few_shot")) {
    spec.few_shot.clear();
    for (const auto& ex : At("generation.few_shot")) {
      spec.few_shot.emplace_back(ex.at("user").get<std::string>(), ex.at("assistant").get<std::string>());
    }
  }
  if (Has("generation.created_at_ms")) {
    spec.created_at_ms = Require<std::int64_t>("generation.created_at_ms");
  } else {
    spec.created_at_ms = SourceDateEpochMs();
  }
  spec.model = Endpoint(clients::EndpointKind::kLlm);
  spec.seed = StageSeed("generation");
  spec.Validate();
  return spec;
}

tts_qc::FilterPolicy RunConfig::Filter() const {
  tts_qc::FilterPolicy p;
  p.ratio_measure = tts_qc::ParseRatioMeasure(Get<std::string>("filter.ratio_measure", "chars"));
  const std::string bounds = Get<std::string>("filter.bounds", "mad");
  if (bounds == "mad") {
    p.bounds = tts_qc::FilterPolicy::Bounds::kMad;
  } else if (bounds == "fixed") {
    p.bounds = tts_qc::FilterPolicy::Bounds::kFixed;
    p.fixed_lo = Require<double>("filter.fixed_lo");
    p.fixed_hi = Require<double>("filter.fixed_hi");
  } else {
    throw ConfigError("filter.bounds", "must be \"mad\" or \"fixed\"");
  }
  p.mad_k = Get("filter.mad_k", p.mad_k);
  p.degenerate_tolerance = Get("filter.degenerate_tolerance", p.degenerate_tolerance);
  p.question_share_target = Get("filter.question_share_target", p.question_share_target);
  p.Validate();
  return p;
}

augment::AugmentPolicy RunConfig::Augment() const {
  augment::AugmentPolicy p;
  p.snr_mean = Get("augment.snr_mean", p.snr_mean);
  p.snr_std = Get("augment.snr_std", p.snr_std);
  p.amp_mean = Get("augment.amp_mean", p.amp_mean);
  p.amp_std = Get("augment.amp_std", p.amp_std);
  p.snr_floor = Get("augment.snr_floor", p.snr_floor);
  p.mix_enabled = Get("augment.mix_enabled", p.mix_enabled);
  if (p.mix_enabled) p.noise_bank = Require<std::string>("augment.noise_bank");
  p.seed = StageSeed("augment");
  p.Validate();
  return p;
}

corpus::SplitSpec RunConfig::Split() const {
  corpus::SplitSpec s;
  const json& targets = At("split.targets");
  if (targets.is_array()) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const std::string path = fmt::format("split.targets.{}", i);
      if (!targets[i].contains("name")) throw ConfigError(path + ".name", "is missing");
      if (!targets[i].contains("hours")) throw ConfigError(path + ".hours", "is missing");
      s.targets.emplace_back(targets[i]["name"].get<std::string>(), targets[i]["hours"].get<double>());
    }
  } else if (targets.is_object()) {
    for (const auto& [name, hours] : targets.items()) s.targets.emplace_back(name, hours.get<double>());
  } else {
    throw ConfigError("split.targets", "must be a list of {name, hours}");
  }
  s.exclusive_speakers = Get("split.exclusive_speakers", s.exclusive_speakers);
  s.exclusive_transcripts = Get("split.exclusive_transcripts", s.exclusive_transcripts);
  s.tolerance = Get("split.tolerance", s.tolerance);
  s.seed = StageSeed("split");
  s.Validate();
  return s;
}

corpus::MixSpec RunConfig::Mix() const {
  corpus::MixSpec m;
  const std::string mode = Require<std::string>("mix.mode");
  try {
    m.mode = corpus::ParseMixMode(mode);
  } catch (const Error&) {
    throw ConfigError("mix.mode", "must be \"constant_total\" or \"additive\"");
  }
  m.real_hours = Require<double>("mix.real_hours");
  m.synthetic_hours = Require<double>("mix.synthetic_hours");
  m.seed = StageSeed("mix");
  m.Validate();
  return m;
}

asr_eval::Normalizer RunConfig::Normalizer() const {
  if (!Has("normalizer")) return {};
  return asr_eval::NormalizerFromJson(At("normalizer"));
}

std::optional<std::int64_t> SourceDateEpochMs() {
  const auto v = Env("SOURCE_DATE_EPOCH");
  if (!v) return std::nullopt;
  try {
    return static_cast<std::int64_t>(std::stoll(*v)) * 1000;
  } catch (const std::exception&) {
    Throw(ErrorKind::kConfig, "SOURCE_DATE_EPOCH is not an integer: " + *v);
  }
}

}  // namespace synthcorpus::config
