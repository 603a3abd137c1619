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
#include <fstream>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "synthcorpus/error.h"
#include "synthcorpus/io.h"
#include "synthcorpus/rng.h"

namespace synthcorpus::review {

namespace fs = std::filesystem;
using nlohmann::json;
using ratings::Metric;
using ratings::Modality;
using ratings::RatingRecord;

std::vector<Metric> DefaultMetrics(Modality m) {
  if (m == Modality::kTtsAudio) return {Metric::kIntelligibility, Metric::kNaturalness5};
  return {Metric::kReadability, Metric::kGrammatical, Metric::kRealWords,
          Metric::kNotableError, Metric::kAdequacy};
}

void Study::Validate() const {
  std::vector<std::string> bad;
  if (study_id.empty()) bad.emplace_back("study_id");
  if (items.empty()) bad.emplace_back("items");
  if (raters.empty()) bad.emplace_back("raters");
  std::set<std::string> ids;
  for (const auto& it : items) {
    if (it.item_id.empty() || !ids.insert(it.item_id).second) {
      bad.emplace_back("items.item_id");
      break;
    }
  }
  for (const auto& it : items) {
    if (modality == Modality::kTtsAudio && it.audio.empty()) {
      bad.emplace_back("items.audio");
      break;
    }
  }
  std::set<std::string> rs(raters.begin(), raters.end());
  if (rs.size() != raters.size() || rs.contains("")) bad.emplace_back("raters");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

Study StudyFromJson(const json& j) {
  Study s;
  s.study_id = j.value("study_id", "");
  s.modality = ratings::ParseModality(j.value("modality", "text"));
  for (const auto& it : j.value("items", json::array())) {
    s.items.push_back({it.value("item_id", ""), it.value("model_id", ""), it.value("text", ""),
                       it.value("english", ""), it.value("audio", "")});
  }
  if (j.contains("metrics")) {
    for (const auto& m : j.at("metrics")) s.metrics.push_back(ratings::ParseMetric(m.get<std::string>()));
  } else {
    s.metrics = DefaultMetrics(s.modality);
  }
  s.shuffle_seed = j.value("shuffle_seed", std::uint64_t{0});
  s.raters = j.value("raters", std::vector<std::string>{});
  s.token = j.value("token", "");
  s.audio_root = j.value("audio_root", "");
  s.Validate();
  return s;
}

Study ReadStudy(const std::string& path) {
  json j;
  try {
    j = json::parse(io::ReadFile(path));
  } catch (const json::exception& e) {
    Throw(ErrorKind::kConfig, fmt::format("{}: {}", path, e.what()));
  }
  Study s = StudyFromJson(j);
  if (!s.audio_root.empty() && fs::path(s.audio_root).is_relative()) {
    s.audio_root = (fs::path(path).parent_path() / s.audio_root).string();
  }
  return s;
}

json ToJson(const Task& t) {
  json metrics = json::array();
  for (Metric m : t.metrics) metrics.push_back(ratings::MetricName(m));
  return {{"item_id", t.item_id},
          {"payload", t.payload},
          {"metrics", std::move(metrics)},
          {"position", t.position},
          {"total", t.total}};
}

struct ReviewStore::Snapshot {
  std::map<std::pair<std::string, std::string>, RatingRecord> live;  // (item, rater)
  std::map<std::pair<std::string, std::string>, std::vector<AuditEntry>> audit;
  std::uint64_t next_seq = 0;
};

ReviewStore::ReviewStore(Study study, std::string log_path)
    : study_(std::move(study)), log_path_(std::move(log_path)) {
  study_.Validate();
  for (std::size_t i = 0; i < study_.items.size(); ++i) item_index_[study_.items[i].item_id] = i;
  base_order_.resize(study_.items.size());
  std::iota(base_order_.begin(), base_order_.end(), 0);
  Rng rng = MakeRng(DeriveSeed(study_.shuffle_seed, "study"));
  Shuffle(base_order_.begin(), base_order_.end(), rng);

  auto snap = std::make_shared<Snapshot>();
  if (fs::exists(log_path_)) {
    std::ifstream in(log_path_, std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception&) {
        if (in.peek() == std::char_traits<char>::eof()) {
          spdlog::warn("review: ignoring truncated last line {} of {}", line_no, log_path_);
          break;
        }
        Throw(ErrorKind::kParseFailure, fmt::format("{}:{}: corrupt log line", log_path_, line_no));
      }
      const RatingRecord r = ratings::RatingFromJson(j.at("record"));
      Apply(*snap, r, j.value("seq", snap->next_seq));
    }
  }
  snapshot_ = std::move(snap);
}

ReviewStore::~ReviewStore() = default;

std::shared_ptr<const ReviewStore::Snapshot> ReviewStore::Current() const {
  std::lock_guard lock(snapshot_mu_);
  return snapshot_;
}

void ReviewStore::Apply(Snapshot& snap, const RatingRecord& record, std::uint64_t seq) const {
  const auto key = std::make_pair(record.item_id, record.rater_id);
  const bool replaced = snap.live.contains(key);
  snap.live[key] = record;
  snap.audit[key].push_back({seq, record, replaced});
  snap.next_seq = std::max(snap.next_seq, seq + 1);
}

const StudyItem* ReviewStore::FindItem(const std::string& item_id) const {
  auto it = item_index_.find(item_id);
  return it == item_index_.end() ? nullptr : &study_.items[it->second];
}

void ReviewStore::RequireRater(const std::string& rater_id) const {
  if (std::find(study_.raters.begin(), study_.raters.end(), rater_id) == study_.raters.end()) {
    Throw(ErrorKind::kNotFound,
          fmt::format("rater '{}' is not enrolled in study '{}'", rater_id, study_.study_id));
  }
}

std::vector<std::string> ReviewStore::Order(const std::string& rater_id) const {
  RequireRater(rater_id);
  std::vector<std::size_t> perm(base_order_.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = MakeRng(DeriveSeed(study_.shuffle_seed, "rater:" + rater_id));
  Shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::string> out;
  out.reserve(perm.size());
  for (std::size_t p : perm) out.push_back(study_.items[base_order_[p]].item_id);
  return out;
}

std::optional<Task> ReviewStore::NextTask(const std::string& rater_id) const {
  const auto order = Order(rater_id);
  const auto snap = Current();
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (snap->live.contains({order[pos], rater_id})) continue;
    const StudyItem& item = *FindItem(order[pos]);
    Task t;
    t.item_id = item.item_id;
    t.metrics = study_.metrics;
    t.position = pos;
    t.total = order.size();
    t.payload = {{"text", item.text}};
    if (study_.modality == Modality::kTtsAudio) {
      t.payload["audio_url"] = "/audio/" + item.item_id;
    } else {
      t.payload["english"] = item.english;
    }
    return t;
  }
  return std::nullopt;
}

std::size_t ReviewStore::Submit(const std::string& rater_id, RatingRecord record) {
  RequireRater(rater_id);
  if (!record.rater_id.empty() && record.rater_id != rater_id) throw ValidationError({"rater_id"});
  const StudyItem* item = FindItem(record.item_id);
  if (item == nullptr) throw ValidationError({"item_id"});
  record.rater_id = rater_id;
  record.model_id = item->model_id;
  record.modality = study_.modality;
  std::vector<std::string> bad = ratings::InvalidFields(record);
  for (Metric m : ratings::AllMetrics()) {
    const bool in_schema =
        std::find(study_.metrics.begin(), study_.metrics.end(), m) != study_.metrics.end();
    if (!in_schema && ratings::MetricValue(record, m).has_value()) {
      bad.emplace_back(ratings::MetricName(m));
    }
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));

  std::lock_guard write(write_mu_);
  auto next = std::make_shared<Snapshot>(*Current());
  const std::uint64_t seq = next->next_seq;
  {
    if (const auto parent = fs::path(log_path_).parent_path(); !parent.empty()) {
      fs::create_directories(parent);
    }
    std::ofstream out(log_path_, std::ios::binary | std::ios::app);
    if (!out) Throw(ErrorKind::kIo, "cannot append to " + log_path_);
    out << json{{"seq", seq}, {"record", ratings::ToJson(record)}}.dump() << '\n';
    out.flush();
    if (!out) Throw(ErrorKind::kIo, "write failed: " + log_path_);
  }
  Apply(*next, record, seq);
  const std::size_t audit_len = next->audit[{record.item_id, rater_id}].size();
  {
    std::lock_guard lock(snapshot_mu_);
    snapshot_ = std::move(next);
  }
  return audit_len;
}

std::vector<RatingRecord> ReviewStore::LiveRecords() const {
  const auto snap = Current();
  std::vector<RatingRecord> out;
  for (const auto& item : study_.items) {
    for (const auto& rater : study_.raters) {
      auto it = snap->live.find({item.item_id, rater});
      if (it != snap->live.end()) out.push_back(it->second);
    }
  }
  return out;
}

std::string ReviewStore::ExportCsv() const { return ratings::ToCsv(LiveRecords()); }

json ReviewStore::Progress() const {
  const auto snap = Current();
  json raters = json::object();
  for (const auto& r : study_.raters) raters[r] = 0;
  for (const auto& [key, rec] : snap->live) raters[key.second] = raters[key.second].get<int>() + 1;
  return {{"study_id", study_.study_id}, {"total", study_.items.size()}, {"raters", raters}};
}

std::vector<AuditEntry> ReviewStore::Audit(const std::string& item_id,
                                           const std::string& rater_id) const {
  const auto snap = Current();
  auto it = snap->audit.find({item_id, rater_id});
  return it == snap->audit.end() ? std::vector<AuditEntry>{} : it->second;
}

// ---- HTTP ------------------------------------------------------------------

namespace {

void SendJson(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, const std::exception& e) {
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    SendJson(res, 422, {{"error", "ValidationError"}, {"fields", v->fields()}});
    return;
  }
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    const int status = err->kind() == ErrorKind::kNotFound ? 404
                       : IsValidationKind(err->kind()) ? 400
                                                       : 500;
    SendJson(res, status, {{"error", ErrorKindName(err->kind())}, {"message", err->what()}});
    return;
  }
  SendJson(res, 400, {{"error", "BadRequest"}, {"message", e.what()}});
}

bool Authorized(const ReviewStore& store, const httplib::Request& req) {
  const std::string& token = store.study().token;
  if (token.empty()) return true;
  if (req.get_header_value("Authorization") == "Bearer " + token) return true;
  return req.has_param("token") && req.get_param_value("token") == token;
}

}  // namespace

ReviewServer::ReviewServer(std::vector<std::shared_ptr<ReviewStore>> stores)
    : server_(std::make_unique<httplib::Server>()) {
  for (auto& s : stores) {
    const std::string id = s->study().study_id;
    if (!stores_.emplace(id, std::move(s)).second) {
      Throw(ErrorKind::kConfig, "duplicate study id: " + id);
    }
  }
  Routes();
}

ReviewServer::~ReviewServer() { Stop(); }

ReviewStore* ReviewServer::Find(const std::string& study_id) const {
  auto it = stores_.find(study_id);
  if (it == stores_.end()) Throw(ErrorKind::kNotFound, "unknown study: " + study_id);
  return it->second.get();
}

void ReviewServer::Routes() {
  server_->set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  // Wraps a handler with study lookup, token check and error mapping.
  auto with_study = [this](auto fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        ReviewStore* store = Find(req.path_params.at("id"));
        if (!Authorized(*store, req)) {
          SendJson(res, 401, {{"error", "Unauthorized"}});
          return;
        }
        fn(*store, req, res);
      } catch (const std::exception& e) {
        SendError(res, e);
      }
    };
  };

  server_->Get("/studies/:id/next",
               with_study([](ReviewStore& store, const httplib::Request& req,
                             httplib::Response& res) {
                 const std::string rater = req.get_param_value("rater");
                 const auto task = store.NextTask(rater);
                 if (!task) {
                   SendJson(res, 200, {{"done", true}});
                 } else {
                   SendJson(res, 200, {{"done", false}, {"task", ToJson(*task)}});
                 }
               }));

  server_->Post("/studies/:id/ratings",
                with_study([](ReviewStore& store, const httplib::Request& req,
                              httplib::Response& res) {
                  json body;
                  try {
                    body = json::parse(req.body);
                  } catch (const json::exception& e) {
                    SendJson(res, 400, {{"error", "BadRequest"}, {"message", e.what()}});
                    return;
                  }
                  if (!body.is_object()) {
                    SendJson(res, 400, {{"error", "BadRequest"}});
                    return;
                  }
                  std::string rater = body.value("rater_id", "");
                  if (req.has_param("rater")) rater = req.get_param_value("rater");
                  body.erase("model_id");
                  body.erase("modality");
                  RatingRecord record = ratings::RatingFromJson(body);
                  const std::size_t audit = store.Submit(rater, std::move(record));
                  SendJson(res, 200, {{"ok", true}, {"audit_length", audit}});
                }));

  server_->Get("/studies/:id/export.csv",
               with_study([](ReviewStore& store, const httplib::Request&,
                             httplib::Response& res) {
                 res.set_content(store.ExportCsv(), "text/csv");
               }));

  server_->Get("/studies/:id/progress",
               with_study([](ReviewStore& store, const httplib::Request&,
                             httplib::Response& res) { SendJson(res, 200, store.Progress()); }));

  server_->Get("/audio/:item", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string item_id = req.path_params.at("item");
    for (const auto& [id, store] : stores_) {
      const Study& s = store->study();
      for (const auto& it : s.items) {
        if (it.item_id != item_id || it.audio.empty()) continue;
        if (!Authorized(*store, req)) {
          SendJson(res, 401, {{"error", "Unauthorized"}});
          return;
        }
        fs::path p(it.audio);
        if (p.is_relative() && !s.audio_root.empty()) p = fs::path(s.audio_root) / p;
        try {
          res.set_content(io::ReadFile(p.string()), "audio/wav");
        } catch (const std::exception& e) {
          SendError(res, e);
        }
        return;
      }
    }
    SendJson(res, 404, {{"error", "NotFound"}, {"message", "unknown audio item: " + item_id}});
  });
}

int ReviewServer::Bind(const ServerOptions& options) {
  if (options.port == 0) {
    const int port = server_->bind_to_any_port(options.host);
    if (port < 0) Throw(ErrorKind::kIo, "cannot bind " + options.host);
    return port;
  }
  if (!server_->bind_to_port(options.host, options.port)) {
    Throw(ErrorKind::kIo, fmt::format("cannot bind {}:{}", options.host, options.port));
  }
  return options.port;
}

void ReviewServer::Serve() { server_->listen_after_bind(); }

int ReviewServer::Start(const ServerOptions& options) {
  const int port = Bind(options);
  thread_ = std::make_unique<std::thread>([this] { Serve(); });
  server_->wait_until_ready();
  return port;
}

void ReviewServer::Stop() {
  if (server_) server_->stop();
  if (thread_ && thread_->joinable()) thread_->join();
  thread_.reset();
}

}  // namespace synthcorpus::review
