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

#include "synthcorpus/review_service.h"

#include <algorithm>
#include <filesystem>
#include <set>

#include <fmt/format.h>
#include <gtest/gtest.h>
#include <httplib.h>

#include "synthcorpus/error.h"
#include "synthcorpus/io.h"
#include "test_support.h"

namespace synthcorpus::review {
namespace {

using nlohmann::json;
using ratings::RatingRecord;
using testing::TempDir;

Study TextStudy() {
  Study s;
  s.study_id = "ha-text";
  s.modality = ratings::Modality::kText;
  s.metrics = DefaultMetrics(s.modality);
  for (int i = 0; i < 6; ++i) {
    s.items.push_back({fmt::format("s{}", i), i % 2 == 0 ? "gpt-4o" : "claude-3.5-sonnet",
                       fmt::format("Jimla ta {}", i), fmt::format("Sentence {}", i), ""});
  }
  s.raters = {"r1", "r2"};
  s.shuffle_seed = 3;
  return s;
}

RatingRecord Rating(const std::string& item, int readability) {
  RatingRecord r;
  r.item_id = item;
  r.readability = readability;
  r.grammatical = 1;
  r.real_words = 1;
  r.notable_error = 0;
  r.adequacy = 5;
  return r;
}

TEST(ReviewStoreTest, OrdersArePerRaterPermutations) {
  TempDir dir("rev");
  ReviewStore store(TextStudy(), dir / "log.jsonl");
  const auto o1 = store.Order("r1");
  const auto o2 = store.Order("r2");
  EXPECT_EQ(std::set<std::string>(o1.begin(), o1.end()).size(), 6u);
  EXPECT_TRUE(std::is_permutation(o1.begin(), o1.end(), o2.begin()));
  EXPECT_NE(o1, o2);
  ReviewStore again(TextStudy(), dir / "other.jsonl");
  EXPECT_EQ(again.Order("r1"), o1);
  EXPECT_THROW(store.Order("stranger"), Error);
}

TEST(ReviewStoreTest, NextTaskWalksOrderUntilDone) {
  TempDir dir("rev");
  ReviewStore store(TextStudy(), dir / "log.jsonl");
  const auto order = store.Order("r1");
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto task = store.NextTask("r1");
    ASSERT_TRUE(task.has_value());
    EXPECT_EQ(task->item_id, order[i]);
    EXPECT_EQ(task->position, i);
    EXPECT_EQ(task->total, 6u);
    EXPECT_EQ(store.Submit("r1", Rating(task->item_id, 4)), 1u);
  }
  EXPECT_FALSE(store.NextTask("r1").has_value());
  EXPECT_TRUE(store.NextTask("r2").has_value());
  EXPECT_EQ(store.Progress()["raters"]["r1"], 6);
  EXPECT_EQ(store.Progress()["raters"]["r2"], 0);
}

TEST(ReviewStoreTest, TaskJsonIsBlind) {
  TempDir dir("rev");
  ReviewStore store(TextStudy(), dir / "log.jsonl");
  const std::string dumped = ToJson(*store.NextTask("r2")).dump();
  EXPECT_EQ(dumped.find("model"), std::string::npos);
  EXPECT_EQ(dumped.find("gpt"), std::string::npos);
  EXPECT_EQ(dumped.find("claude"), std::string::npos);
  EXPECT_NE(dumped.find("english"), std::string::npos);
}

TEST(ReviewStoreTest, ResubmissionKeepsAuditAndLastWriteWins) {
  TempDir dir("rev");
  ReviewStore store(TextStudy(), dir / "log.jsonl");
  EXPECT_EQ(store.Submit("r1", Rating("s1", 2)), 1u);
  EXPECT_EQ(store.Submit("r1", Rating("s1", 6)), 2u);
  const auto audit = store.Audit("s1", "r1");
  ASSERT_EQ(audit.size(), 2u);
  EXPECT_FALSE(audit[0].replaced);
  EXPECT_TRUE(audit[1].replaced);
  EXPECT_LT(audit[0].seq, audit[1].seq);
  const auto live = store.LiveRecords();
  ASSERT_EQ(live.size(), 1u);
  EXPECT_EQ(live[0].readability, 6);
  EXPECT_EQ(live[0].model_id, "claude-3.5-sonnet");
}

TEST(ReviewStoreTest, ValidationNamesFields) {
  TempDir dir("rev");
  ReviewStore store(TextStudy(), dir / "log.jsonl");
  try {
    store.Submit("r1", Rating("nope", 4));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.fields(), std::vector<std::string>{"item_id"});
  }
  RatingRecord r = Rating("s0", 9);
  r.intelligibility = 3;
  try {
    store.Submit("r1", r);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.fields(), (std::vector<std::string>{"readability", "intelligibility"}));
  }
  EXPECT_TRUE(store.LiveRecords().empty());
}

TEST(ReviewStoreTest, ReplaysLogAndIgnoresTruncatedTail) {
  TempDir dir("rev");
  const std::string log = dir / "log.jsonl";
  {
    ReviewStore store(TextStudy(), log);
    store.Submit("r1", Rating("s0", 3));
    store.Submit("r2", Rating("s0", 5));
    store.Submit("r1", Rating("s0", 4));
  }
  io::WriteFile(log, io::ReadFile(log) + R"({"seq":3,"record":{"item_id":"s2",)");
  ReviewStore store(TextStudy(), log);
  const auto live = store.LiveRecords();
  ASSERT_EQ(live.size(), 2u);
  EXPECT_EQ(live[0].rater_id, "r1");
  EXPECT_EQ(live[0].readability, 4);
  EXPECT_EQ(store.Audit("s0", "r1").size(), 2u);
}

TEST(ReviewStoreTest, ExportFeedsSummaries) {
  TempDir dir("rev");
  ReviewStore store(TextStudy(), dir / "log.jsonl");
  for (int i = 0; i < 6; ++i) {
    store.Submit("r1", Rating(fmt::format("s{}", i), 1 + i));
    store.Submit("r2", Rating(fmt::format("s{}", i), 2));
  }
  const auto records = ratings::FromCsv(store.ExportCsv());
  EXPECT_EQ(records, store.LiveRecords());
  const auto summary = ratings::Summarize(records, "ha");
  ASSERT_EQ(summary.size(), 2u);
  for (const auto& g : summary) EXPECT_EQ(g.metrics.front().n, 6u);
}

TEST(StudyTest, ValidateAndFromJson) {
  const json j = {{"study_id", "tts"},
                  {"modality", "tts_audio"},
                  {"items", {{{"item_id", "a1"}, {"model_id", "xtts"}, {"text", "x"}, {"audio", "a1.wav"}}}},
                  {"raters", {"r"}}};
  const Study s = StudyFromJson(j);
  EXPECT_EQ(s.metrics, DefaultMetrics(ratings::Modality::kTtsAudio));
  json bad = j;
  bad["items"][0].erase("audio");
  bad["raters"] = json::array();
  try {
    StudyFromJson(bad);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.fields(), (std::vector<std::string>{"raters", "items.audio"}));
  }
}

// ---- HTTP ------------------------------------------------------------------

struct ServerFixture {
  TempDir dir{"srv"};
  std::shared_ptr<ReviewStore> text_store;
  std::shared_ptr<ReviewStore> audio_store;
  std::unique_ptr<ReviewServer> server;
  std::unique_ptr<httplib::Client> client;

  ServerFixture() {
    Study audio;
    audio.study_id = "ha-tts";
    audio.modality = ratings::Modality::kTtsAudio;
    audio.metrics = DefaultMetrics(audio.modality);
    audio.items = {{"a1", "xtts", "Sannu", "", "a1.wav"}};
    audio.raters = {"r1"};
    audio.token = "letmein";
    audio.audio_root = dir.path().string();
    wav::Write(dir / "a1.wav", testing::Sine(300, 0.2, 0.05));
    text_store = std::make_shared<ReviewStore>(TextStudy(), dir / "text.jsonl");
    audio_store = std::make_shared<ReviewStore>(audio, dir / "audio.jsonl");
    server = std::make_unique<ReviewServer>(std::vector{text_store, audio_store});
    const int port = server->Start({});
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
};

TEST(ReviewServerTest, NextTaskAndSubmitOverHttp) {
  ServerFixture fx;
  auto res = fx.client->Get("/studies/ha-text/next?rater=r1");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
  const json body = json::parse(res->body);
  EXPECT_FALSE(body["done"].get<bool>());
  EXPECT_EQ(res->body.find("gpt"), std::string::npos);
  EXPECT_EQ(res->body.find("claude"), std::string::npos);
  const std::string item = body["task"]["item_id"];

  json rating = {{"item_id", item}, {"rater_id", "r1"}, {"readability", 5}, {"grammatical", 1},
                 {"real_words", 1},  {"notable_error", 0}, {"adequacy", 6},
                 {"model_id", "forged"}};
  res = fx.client->Post("/studies/ha-text/ratings", rating.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["audit_length"], 1);
  res = fx.client->Post("/studies/ha-text/ratings", rating.dump(), "application/json");
  EXPECT_EQ(json::parse(res->body)["audit_length"], 2);
  EXPECT_NE(fx.text_store->LiveRecords()[0].model_id, "forged");

  res = fx.client->Get("/studies/ha-text/export.csv");
  ASSERT_TRUE(res);
  const auto exported = ratings::FromCsv(res->body);
  ASSERT_EQ(exported.size(), 1u);
  EXPECT_EQ(exported[0].adequacy, 6);

  res = fx.client->Get("/studies/ha-text/progress");
  EXPECT_EQ(json::parse(res->body)["raters"]["r1"], 1);
}

TEST(ReviewServerTest, ErrorStatuses) {
  ServerFixture fx;
  auto res = fx.client->Get("/studies/missing/next?rater=r1");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  res = fx.client->Get("/studies/ha-text/next?rater=ghost");
  EXPECT_EQ(res->status, 404);

  json rating = {{"item_id", "s0"}, {"rater_id", "r1"}, {"readability", 8}};
  res = fx.client->Post("/studies/ha-text/ratings", rating.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  const json err = json::parse(res->body);
  EXPECT_EQ(err["error"], "ValidationError");
  const auto fields = err["fields"].get<std::vector<std::string>>();
  EXPECT_NE(std::find(fields.begin(), fields.end(), "readability"), fields.end());
  EXPECT_NE(std::find(fields.begin(), fields.end(), "adequacy"), fields.end());

  res = fx.client->Post("/studies/ha-text/ratings", "{not json", "application/json");
  EXPECT_EQ(res->status, 400);
}

TEST(ReviewServerTest, TokenGuardsStudyAndAudio) {
  ServerFixture fx;
  auto res = fx.client->Get("/studies/ha-tts/next?rater=r1");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 401);
  res = fx.client->Get("/studies/ha-tts/next?rater=r1&token=letmein");
  EXPECT_EQ(res->status, 200);
  const json body = json::parse(res->body);
  EXPECT_EQ(body["task"]["payload"]["audio_url"], "/audio/a1");
  EXPECT_EQ(res->body.find("xtts"), std::string::npos);

  EXPECT_EQ(fx.client->Get("/audio/a1")->status, 401);
  httplib::Headers auth{{"Authorization", "Bearer letmein"}};
  res = fx.client->Get("/audio/a1", auth);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body.substr(0, 4), "RIFF");
  EXPECT_EQ(fx.client->Get("/audio/zzz")->status, 404);

  json rating = {{"item_id", "a1"}, {"rater_id", "r1"}, {"intelligibility", 4}, {"naturalness_5", 3}};
  res = fx.client->Post("/studies/ha-tts/ratings", auth, rating.dump(), "application/json");
  EXPECT_EQ(res->status, 200);
}

}  // namespace
}  // namespace synthcorpus::review
