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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "synthcorpus/rating_analysis.h"

namespace httplib {
class Server;
}

namespace synthcorpus::review {

struct StudyItem {
  std::string item_id;
  std::string model_id;  // never sent to raters
  std::string text;
  std::string english;   // gloss shown with text items
  std::string audio;     // WAV path for tts_audio items, relative to audio_root
};

struct Study {
  std::string study_id;
  ratings::Modality modality = ratings::Modality::kText;
  std::vector<StudyItem> items;
  std::vector<ratings::Metric> metrics;  // defaults from the modality
  std::uint64_t shuffle_seed = 0;
  std::vector<std::string> raters;
  std::string token;       // optional static bearer token
  std::string audio_root;

  void Validate() const;
};

std::vector<ratings::Metric> DefaultMetrics(ratings::Modality m);
Study StudyFromJson(const nlohmann::json& j);
Study ReadStudy(const std::string& path);

struct Task {
  std::string item_id;
  nlohmann::json payload;
  std::vector<ratings::Metric> metrics;
  std::size_t position = 0;  // 0-based index in the rater's order
  std::size_t total = 0;
};

// Response shape of the next-task endpoint. Contains no model_id.
nlohmann::json ToJson(const Task& t);

struct AuditEntry {
  std::uint64_t seq = 0;
  ratings::RatingRecord record;
  bool replaced = false;  // an earlier record for the same (item, rater) existed
};

// One study: the definition, its append-only JSONL log and the
// last-write-wins projection. Writes are serialized; reads work on an
// immutable snapshot that is swapped after each write.
class ReviewStore {
 public:
  // Replays |log_path| if it exists. A truncated final line is ignored.
  ReviewStore(Study study, std::string log_path);
  ~ReviewStore();

  ReviewStore(const ReviewStore&) = delete;
  ReviewStore& operator=(const ReviewStore&) = delete;

  const Study& study() const { return study_; }

  // Throws NotFound for an unenrolled rater.
  std::vector<std::string> Order(const std::string& rater_id) const;
  // First item in the rater's order without a rating from them; nullopt when done.
  std::optional<Task> NextTask(const std::string& rater_id) const;

  // Fills rater_id, model_id and modality from the study, validates and
  // appends. Returns the audit length for (item, rater).
  std::size_t Submit(const std::string& rater_id, ratings::RatingRecord record);

  std::vector<ratings::RatingRecord> LiveRecords() const;
  std::string ExportCsv() const;
  nlohmann::json Progress() const;
  std::vector<AuditEntry> Audit(const std::string& item_id, const std::string& rater_id) const;

 private:
  struct Snapshot;

  std::shared_ptr<const Snapshot> Current() const;
  void Apply(Snapshot& snap, const ratings::RatingRecord& record, std::uint64_t seq) const;
  const StudyItem* FindItem(const std::string& item_id) const;
  void RequireRater(const std::string& rater_id) const;

  Study study_;
  std::string log_path_;
  std::map<std::string, std::size_t> item_index_;
  std::vector<std::size_t> base_order_;

  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::mutex write_mu_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 binds any free port
};

class ReviewServer {
 public:
  explicit ReviewServer(std::vector<std::shared_ptr<ReviewStore>> stores);
  ~ReviewServer();

  // Binds and returns the port. Serve() blocks until Stop().
  int Bind(const ServerOptions& options);
  void Serve();
  // Bind + Serve on a background thread.
  int Start(const ServerOptions& options);
  void Stop();

 private:
  void Routes();
  ReviewStore* Find(const std::string& study_id) const;

  std::map<std::string, std::shared_ptr<ReviewStore>> stores_;
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<std::thread> thread_;
};

}  // namespace synthcorpus::review
