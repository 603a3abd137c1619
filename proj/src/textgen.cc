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

#include "synthcorpus/textgen.h"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <future>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "synthcorpus/io.h"
#include "synthcorpus/rng.h"
#include "synthcorpus/text.h"

namespace synthcorpus::textgen {

using nlohmann::json;

const std::vector<std::string>& DefaultThemes() {
  // The second half stands in for corpus-derived topics; replace it with
  // the output of topic modeling on the target evaluation data.
  static const std::vector<std::string> kThemes = {
      "no poverty",
      "zero hunger",
      "good health and well-being",
      "quality education",
      "gender equality",
      "clean water and sanitation",
      "affordable and clean energy",
      "decent work and economic growth",
      "industry, innovation and infrastructure",
      "reduced inequalities",
      "sustainable cities and communities",
      "responsible consumption and production",
      "climate action",
      "life below water",
      "life on land",
      "peace, justice and strong institutions",
      "partnerships for the goals",
      "travel and tourism",
      "science and discovery",
      "sports",
      "politics and government",
      "history",
      "nature and geography",
      "weather",
      "food and cooking",
      "family and relationships",
      "music and arts",
      "technology",
      "medicine and disease",
      "religion and belief",
      "transportation",
      "business and money",
      "animals",
      "daily life",
  };
  return kThemes;
}

std::vector<std::pair<std::string, std::string>> DefaultFewShot() {
  return {
      {"Write 2 short simple sentences or questions about the theme \"family\".",
       R"({"sentences":[{"target":"Mahaifiyata tana dafa abinci.","english":"My mother is cooking food."},)"
       R"({"target":"Ina ƙanenka yake?","english":"Where is your younger brother?"}]})"},
      {"Write 2 short simple sentences or questions about the theme \"weather\".",
       R"({"sentences":[{"target":"Yau ana ruwan sama.","english":"It is raining today."},)"
       R"({"target":"Rana tana da zafi sosai.","english":"The sun is very hot."}]})"},
  };
}

void GenerationSpec::Validate() const {
  std::vector<std::string> bad;
  if (language.name.empty()) bad.emplace_back("language.name");
  if (themes.empty()) bad.emplace_back("themes");
  if (sentences_per_request < 1) bad.emplace_back("sentences_per_request");
  if (!(question_share_target >= 0.0 && question_share_target <= 1.0)) {
    bad.emplace_back("question_share_target");
  }
  if (total_target < 1) bad.emplace_back("total_target");
  if (failure_budget < 0) bad.emplace_back("failure_budget");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

json ToJson(const SentencePair& p) {
  return json{{"id", p.id},
              {"target_text", p.target_text},
              {"english_text", p.english_text},
              {"theme", p.theme},
              {"model_id", p.model_id},
              {"batch_id", p.batch_id},
              {"is_question", p.is_question},
              {"created_at", p.created_at}};
}

SentencePair SentencePairFromJson(const json& j) {
  SentencePair p;
  p.id = j.value("id", "");
  p.target_text = j.at("target_text").get<std::string>();
  p.english_text = j.value("english_text", "");
  p.theme = j.value("theme", "");
  p.model_id = j.value("model_id", "");
  p.batch_id = j.value("batch_id", "");
  p.is_question = j.value("is_question", text::IsQuestion(p.target_text));
  p.created_at = j.value("created_at", "");
  return p;
}

std::vector<SentencePair> ReadPairsJsonl(const std::string& path) {
  std::vector<SentencePair> pairs;
  for (const auto& row : io::ReadJsonLines(path)) pairs.push_back(SentencePairFromJson(row));
  return pairs;
}

void WritePairsJsonl(const std::string& path, const std::vector<SentencePair>& pairs) {
  std::vector<json> rows;
  rows.reserve(pairs.size());
  for (const auto& p : pairs) rows.push_back(ToJson(p));
  io::WriteFile(path, io::ToJsonLines(rows));
}

std::string SerializeGeneration(const std::vector<SentencePair>& pairs) {
  json items = json::array();
  for (const auto& p : pairs) {
    items.push_back({{"target", p.target_text}, {"english", p.english_text}});
  }
  return json{{"sentences", items}}.dump();
}

clients::ChatRequest BuildPrompt(const GenerationSpec& spec, std::string_view theme, int n) {
  if (std::find(spec.themes.begin(), spec.themes.end(), theme) == spec.themes.end()) {
    Throw(ErrorKind::kInvalidInput, fmt::format("theme '{}' is not in the configured theme list", theme));
  }
  if (n < 1) Throw(ErrorKind::kInvalidInput, "sentence count must be at least 1");

  const std::string& lang = spec.language.name;
  clients::ChatRequest req;
  req.system_prompt = fmt::format(
      "You are a native speaker and careful writer of {0}. Write short, simple "
      "sentences and questions directly in {0}; do not translate them from "
      "another language. Use everyday vocabulary and the standard {0} "
      "orthography. For every item also give an English translation. Respond "
      "with standardized JSON only, in the form "
      "{{\"sentences\":[{{\"target\":\"<{0} text>\",\"english\":\"<English "
      "translation>\"}}]}} and nothing else.",
      lang);
  req.few_shot = spec.few_shot;
  const int pct = static_cast<int>(std::lround(spec.question_share_target * 100.0));
  if (n == 1) {
    req.user_prompt = fmt::format(
        "Write 1 short simple sentence or question in {} about the theme \"{}\". "
        "Return a JSON array with exactly 1 item under \"sentences\".",
        lang, theme);
  } else {
    req.user_prompt = fmt::format(
        "Write {} short simple sentences and questions in {} about the theme \"{}\". "
        "About {}% of them should be questions. Return a JSON array with exactly {} "
        "items under \"sentences\".",
        n, lang, theme, pct, n);
  }
  req.temperature = spec.temperature;
  return req;
}

namespace {

// End offset (exclusive) of the balanced JSON object starting at |begin|,
// or npos when the braces never balance.
std::size_t MatchObject(std::string_view s, std::size_t begin) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = begin; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

bool MatchesSchema(const json& j) {
  if (!j.is_object() || !j.contains("sentences") || !j["sentences"].is_array()) return false;
  for (const auto& item : j["sentences"]) {
    if (!item.is_object() || !item.contains("target") || !item["target"].is_string()) {
      return false;
    }
    if (item.contains("english") && !item["english"].is_string()) return false;
  }
  return true;
}

}  // namespace

std::vector<SentencePair> ParseGeneration(std::string_view raw, std::string_view theme,
                                          std::string_view model_id,
                                          std::string_view batch_id) {
  bool saw_json = false;
  for (std::size_t pos = raw.find('{'); pos != std::string_view::npos;
       pos = raw.find('{', pos + 1)) {
    const std::size_t end = MatchObject(raw, pos);
    if (end == std::string_view::npos) continue;
    const json candidate = json::parse(raw.substr(pos, end - pos), nullptr, false);
    if (candidate.is_discarded()) continue;
    saw_json = true;
    // Nested objects are still visited, so wrapped payloads are found.
    if (!MatchesSchema(candidate)) continue;
    std::vector<SentencePair> pairs;
    for (const auto& item : candidate["sentences"]) {
      SentencePair p;
      p.target_text = text::CollapseWhitespace(item["target"].get<std::string>());
      if (p.target_text.empty()) continue;
      p.english_text = text::CollapseWhitespace(item.value("english", ""));
      p.theme = theme;
      p.model_id = model_id;
      p.batch_id = batch_id;
      p.is_question = text::IsQuestion(p.target_text);
      pairs.push_back(std::move(p));
    }
    return pairs;
  }
  if (saw_json) {
    Throw(ErrorKind::kSchemaFailure,
          "no JSON object of the form {\"sentences\":[{\"target\",\"english\"}]}");
  }
  throw ParseFailure("no parseable JSON object in response", std::string(raw));
}

json ToJson(const GenerationReport& r) {
  return json{{"requests", r.requests},
              {"requests_per_theme", r.requests_per_theme},
              {"pairs_per_theme", r.pairs_per_theme},
              {"parse_failures", r.parse_failures},
              {"schema_failures", r.schema_failures},
              {"transport_failures", r.transport_failures},
              {"duplicates", r.duplicates},
              {"total", r.total},
              {"questions", r.questions}};
}

std::string MakeUlid(std::int64_t unix_ms, std::uint64_t rand_hi, std::uint64_t rand_lo) {
  static constexpr char kCrockford[] = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";
  std::string out(26, '0');
  auto ms = static_cast<std::uint64_t>(unix_ms) & ((1ULL << 48) - 1);
  for (int i = 9; i >= 0; --i) {
    out[i] = kCrockford[ms & 31];
    ms >>= 5;
  }
  // 80 random bits: 16 from rand_hi, 64 from rand_lo.
  std::uint64_t hi = rand_hi & 0xFFFF;
  std::uint64_t lo = rand_lo;
  for (int i = 25; i >= 10; --i) {
    out[i] = kCrockford[lo & 31];
    lo = (lo >> 5) | ((hi & 31) << 59);
    hi >>= 5;
  }
  return out;
}

std::string FormatTimestamp(std::int64_t unix_ms) {
  const std::time_t secs = static_cast<std::time_t>(unix_ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}.{:03d}Z", tm.tm_year + 1900,
                     tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                     static_cast<int>(unix_ms % 1000));
}

namespace {

struct RequestOutcome {
  int index = 0;
  std::vector<SentencePair> pairs;
  enum class Status { kOk, kParseFailure, kSchemaFailure, kTransportFailure } status =
      Status::kOk;
};

void Finalize(const GenerationSpec& spec, std::vector<RequestOutcome>& outcomes,
              GenerationResult& result) {
  std::sort(outcomes.begin(), outcomes.end(),
            [](const RequestOutcome& a, const RequestOutcome& b) { return a.index < b.index; });

  struct Keyed {
    std::size_t theme_index;
    int request_index;
    std::size_t position;
    SentencePair pair;
  };
  std::vector<Keyed> keyed;
  const auto target = static_cast<std::size_t>(spec.total_target);
  for (auto& outcome : outcomes) {
    const std::size_t theme_index = static_cast<std::size_t>(outcome.index) % spec.themes.size();
    for (std::size_t i = 0; i < outcome.pairs.size() && keyed.size() < target; ++i) {
      keyed.push_back({theme_index, outcome.index, i, std::move(outcome.pairs[i])});
    }
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.theme_index, a.request_index, a.position) <
           std::tie(b.theme_index, b.request_index, b.position);
  });

  const std::int64_t now_ms =
      spec.created_at_ms.value_or(std::chrono::duration_cast<std::chrono::milliseconds>(
                                      std::chrono::system_clock::now().time_since_epoch())
                                      .count());
  const std::string created_at = FormatTimestamp(now_ms);
  Rng id_rng = MakeRng(DeriveSeed(spec.seed, "ids"));

  std::unordered_set<std::string> seen;
  auto& report = result.report;
  for (auto& k : keyed) {
    SentencePair& p = k.pair;
    const std::uint64_t hi = id_rng();
    const std::uint64_t lo = id_rng();
    p.id = MakeUlid(now_ms, hi, lo);
    p.created_at = created_at;
    if (!seen.insert(text::Canonical(p.target_text)).second) ++report.duplicates;
    if (p.is_question) ++report.questions;
    ++report.pairs_per_theme[p.theme];
    result.pairs.push_back(std::move(p));
  }
  report.total = static_cast<int>(result.pairs.size());

  Rng shuffle_rng = MakeRng(DeriveSeed(spec.seed, "shuffle"));
  Shuffle(result.pairs.begin(), result.pairs.end(), shuffle_rng);
}

}  // namespace

GenerationResult GenerateCorpus(const GenerationSpec& spec, clients::ModelClient& client) {
  spec.Validate();
  const int per_request = spec.sentences_per_request;
  const int n_themes = static_cast<int>(spec.themes.size());
  const int needed = (spec.total_target + per_request - 1) / per_request;
  const int max_requests =
      spec.max_requests > 0 ? spec.max_requests : 4 * needed + n_themes;
  const int wave_limit = std::max(1, client.config().max_parallel);

  GenerationResult result;
  std::vector<RequestOutcome> outcomes;
  int collected = 0;
  int next_index = 0;

  auto run_one = [&](int index) {
    RequestOutcome out;
    out.index = index;
    const std::string& theme = spec.themes[static_cast<std::size_t>(index % n_themes)];
    const std::string batch_id = fmt::format("{}-{:06d}", spec.batch_prefix, index);
    clients::ChatRequest req = BuildPrompt(spec, theme, per_request);
    req.batch_tag = batch_id;
    try {
      const std::string raw = client.CompleteChat(req);
      out.pairs = ParseGeneration(raw, theme, client.config().model_id, batch_id);
    } catch (const ParseFailure& e) {
      spdlog::warn("{}: unparseable response ({} bytes)", batch_id, e.raw().size());
      out.status = RequestOutcome::Status::kParseFailure;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kSchemaFailure) {
        spdlog::warn("{}: {}", batch_id, e.what());
        out.status = RequestOutcome::Status::kSchemaFailure;
      } else {
        spdlog::warn("{}: {}", batch_id, e.what());
        out.status = RequestOutcome::Status::kTransportFailure;
      }
    }
    return out;
  };

  while (collected < spec.total_target && next_index < max_requests) {
    const int remaining_requests =
        (spec.total_target - collected + per_request - 1) / per_request;
    const int wave = std::min({wave_limit, remaining_requests, max_requests - next_index});
    std::vector<std::future<RequestOutcome>> futures;
    futures.reserve(static_cast<std::size_t>(wave));
    for (int i = 0; i < wave; ++i) {
      futures.push_back(std::async(std::launch::async, run_one, next_index + i));
    }
    next_index += wave;
    for (auto& f : futures) {
      RequestOutcome out = f.get();
      auto& report = result.report;
      ++report.requests;
      ++report.requests_per_theme[spec.themes[static_cast<std::size_t>(out.index % n_themes)]];
      switch (out.status) {
        case RequestOutcome::Status::kOk: break;
        case RequestOutcome::Status::kParseFailure: ++report.parse_failures; break;
        case RequestOutcome::Status::kSchemaFailure: ++report.schema_failures; break;
        case RequestOutcome::Status::kTransportFailure: ++report.transport_failures; break;
      }
      collected += static_cast<int>(out.pairs.size());
      outcomes.push_back(std::move(out));
    }
    if (result.report.transport_failures > spec.failure_budget) {
      Finalize(spec, outcomes, result);
      throw GenerationAborted(
          fmt::format("{} transport failures exceed budget of {}",
                      result.report.transport_failures, spec.failure_budget),
          std::move(result));
    }
  }
  if (collected < spec.total_target) {
    spdlog::warn("request cap {} reached with {} of {} pairs", max_requests, collected,
                 spec.total_target);
  }
  Finalize(spec, outcomes, result);
  return result;
}

}  // namespace synthcorpus::textgen
