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

#include "synthcorpus/corpus.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "synthcorpus/csv.h"
#include "synthcorpus/error.h"
#include "synthcorpus/io.h"
#include "synthcorpus/rng.h"
#include "synthcorpus/text.h"

namespace synthcorpus::corpus {

using nlohmann::json;

std::string_view GenderName(Gender g) {
  switch (g) {
    case Gender::kMale: return "male";
    case Gender::kFemale: return "female";
    case Gender::kUnknown: return "unknown";
  }
  return "unknown";
}

Gender ParseGender(std::string_view s) {
  const std::string g = text::FoldCase(text::Trim(s));
  if (g == "male" || g == "m") return Gender::kMale;
  if (g == "female" || g == "f") return Gender::kFemale;
  return Gender::kUnknown;
}

std::string_view OriginName(Origin o) { return o == Origin::kReal ? "real" : "synthetic"; }

Origin ParseOrigin(std::string_view s) {
  if (s == "real") return Origin::kReal;
  if (s == "synthetic") return Origin::kSynthetic;
  throw ValidationError({"origin"});
}

Micros ToMicros(double seconds) { return static_cast<Micros>(std::llround(seconds * 1e6)); }
double ToHours(Micros us) { return static_cast<double>(us) / 3.6e9; }
Micros HoursToMicros(double hours) { return static_cast<Micros>(std::llround(hours * 3.6e9)); }

void Validate(const Utterance& u) {
  std::vector<std::string> bad;
  if (u.id.empty()) bad.emplace_back("id");
  if (text::Trim(u.transcript).empty()) bad.emplace_back("transcript");
  if (!(u.duration > 0.0)) bad.emplace_back("duration");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

json ToJson(const Utterance& u) {
  json j{{"id", u.id},
         {"transcript", u.transcript},
         {"audio", u.audio},
         {"duration", u.duration},
         {"speaker_id", u.speaker_id},
         {"gender", GenderName(u.gender)},
         {"origin", OriginName(u.origin)},
         {"dataset_tag", u.dataset_tag}};
  if (u.hypothesis) j["hypothesis"] = *u.hypothesis;
  return j;
}

Utterance UtteranceFromJson(const json& j) {
  Utterance u;
  u.id = j.value("id", "");
  u.transcript = j.value("transcript", "");
  u.audio = j.value("audio", "");
  u.duration = j.value("duration", 0.0);
  u.speaker_id = j.value("speaker_id", "");
  u.gender = ParseGender(j.value("gender", "unknown"));
  u.origin = ParseOrigin(j.value("origin", "real"));
  u.dataset_tag = j.value("dataset_tag", "");
  if (j.contains("hypothesis") && j["hypothesis"].is_string()) {
    u.hypothesis = j["hypothesis"].get<std::string>();
  }
  Validate(u);
  return u;
}

Micros Manifest::total_micros() const {
  Micros total = 0;
  for (const auto& u : utterances) total += u.micros();
  return total;
}

std::string ToJsonl(const Manifest& m) {
  std::string out = json{{"schema", kManifestSchema},
                         {"version", kManifestVersion},
                         {"provenance", m.provenance}}
                        .dump();
  out.push_back('\n');
  for (const auto& u : m.utterances) {
    out += ToJson(u).dump();
    out.push_back('\n');
  }
  return out;
}

Manifest ManifestFromJsonl(std::string_view data) {
  Manifest m;
  std::istringstream in{std::string(data)};
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      Throw(ErrorKind::kParseFailure, fmt::format("manifest line {} is not JSON", lineno));
    }
    if (first) {
      first = false;
      if (j.contains("schema")) {
        if (j["schema"] != kManifestSchema) {
          Throw(ErrorKind::kSchemaFailure, "unknown manifest schema");
        }
        if (j.value("version", 0) > kManifestVersion) {
          Throw(ErrorKind::kSchemaFailure, "manifest version is newer than supported");
        }
        m.provenance = j.value("provenance", json::object());
        continue;
      }
    }
    try {
      m.utterances.push_back(UtteranceFromJson(j));
    } catch (const ValidationError& e) {
      std::vector<std::string> fields;
      for (const auto& f : e.fields()) fields.push_back(fmt::format("line {}: {}", lineno, f));
      throw ValidationError(std::move(fields));
    }
  }
  return m;
}

Manifest ReadManifest(const std::string& path) { return ManifestFromJsonl(io::ReadFile(path)); }

void WriteManifest(const std::string& path, const Manifest& m) {
  io::WriteFile(path, ToJsonl(m));
}

Manifest ImportCsv(std::string_view data, std::string_view dataset_tag, Origin origin) {
  const csv::Table table = csv::Table::FromString(data);
  const std::size_t c_path = table.RequireColumn("path");
  const std::size_t c_text = table.RequireColumn("transcript");
  const std::size_t c_speaker = table.RequireColumn("speaker");
  const std::size_t c_gender = table.RequireColumn("gender");
  const std::size_t c_duration = table.RequireColumn("duration");
  Manifest m;
  m.provenance = {{"imported_from", "csv"}, {"dataset_tag", dataset_tag}};
  std::size_t row_no = 1;
  for (const auto& row : table.rows()) {
    ++row_no;
    Utterance u;
    u.audio = row[c_path];
    u.id = fmt::format("{}:{}", dataset_tag, row[c_path]);
    u.transcript = row[c_text];
    u.speaker_id = row[c_speaker];
    u.gender = ParseGender(row[c_gender]);
    u.origin = origin;
    u.dataset_tag = dataset_tag;
    try {
      std::size_t used = 0;
      u.duration = std::stod(row[c_duration], &used);
    } catch (const std::exception&) {
      throw ValidationError({fmt::format("row {}: duration", row_no)});
    }
    try {
      Validate(u);
    } catch (const ValidationError& e) {
      std::vector<std::string> fields;
      for (const auto& f : e.fields()) fields.push_back(fmt::format("row {}: {}", row_no, f));
      throw ValidationError(std::move(fields));
    }
    m.utterances.push_back(std::move(u));
  }
  return m;
}

// ---- split ---------------------------------------------------------------

void SplitSpec::Validate() const {
  std::vector<std::string> bad;
  std::set<std::string> names;
  if (targets.empty()) bad.emplace_back("targets");
  for (const auto& [name, hours] : targets) {
    if (!names.insert(name).second) bad.push_back("targets." + name + " (duplicate)");
    if (!(hours > 0.0)) bad.push_back("targets." + name);
  }
  if (!(tolerance >= 0.0 && tolerance < 1.0)) bad.emplace_back("tolerance");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t Find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void Union(std::size_t a, std::size_t b) {
    a = Find(a);
    b = Find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<int> rank_;
};

struct Group {
  std::vector<std::size_t> members;
  Micros duration = 0;
};

}  // namespace

SplitResult Split(const Manifest& manifest, const SplitSpec& spec) {
  spec.Validate();
  const auto& utts = manifest.utterances;
  const std::size_t n = utts.size();

  std::vector<Micros> target_us;
  Micros target_sum = 0;
  std::size_t largest = 0;
  for (std::size_t s = 0; s < spec.targets.size(); ++s) {
    target_us.push_back(HoursToMicros(spec.targets[s].second));
    target_sum += target_us.back();
    if (target_us[s] > target_us[largest]) largest = s;
  }
  const Micros total = manifest.total_micros();
  if (total < target_sum) {
    throw InsufficientData(
        fmt::format("corpus has {:.4f} h but targets sum to {:.4f} h", ToHours(total),
                    ToHours(target_sum)),
        ToHours(target_sum - total));
  }

  UnionFind uf(n);
  std::unordered_map<std::string, std::size_t> by_speaker;
  std::unordered_map<std::string, std::size_t> by_transcript;
  for (std::size_t i = 0; i < n; ++i) {
    if (spec.exclusive_speakers && !utts[i].speaker_id.empty()) {
      auto [it, inserted] = by_speaker.emplace(utts[i].speaker_id, i);
      if (!inserted) uf.Union(i, it->second);
    }
    if (spec.exclusive_transcripts) {
      auto [it, inserted] = by_transcript.emplace(text::Canonical(utts[i].transcript), i);
      if (!inserted) uf.Union(i, it->second);
    }
  }
  std::unordered_map<std::size_t, std::size_t> root_to_group;
  std::vector<Group> groups;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = root_to_group.emplace(uf.Find(i), groups.size());
    if (inserted) groups.emplace_back();
    Group& g = groups[it->second];
    g.members.push_back(i);
    g.duration += utts[i].micros();
  }

  auto upper = [&](std::size_t s) {
    return static_cast<Micros>(std::floor(static_cast<double>(target_us[s]) * (1.0 + spec.tolerance)));
  };
  for (const auto& g : groups) {
    if (g.duration > upper(largest)) {
      std::set<std::string> speakers;
      std::set<std::string> transcripts;
      for (std::size_t i : g.members) {
        speakers.insert(utts[i].speaker_id);
        if (transcripts.size() < 5) transcripts.insert(utts[i].transcript);
      }
      Throw(ErrorKind::kUnsplittableGroup,
            fmt::format("a connected group of {} utterances lasts {:.4f} h, more than the "
                        "largest target allows; speakers [{}]; transcripts include [{}]",
                        g.members.size(), ToHours(g.duration), fmt::join(speakers, ", "),
                        fmt::join(transcripts, " | ")));
    }
  }

  // Seeded shuffle breaks ties among equal-length groups reproducibly.
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = MakeRng(spec.seed);
  Shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return groups[a].duration > groups[b].duration;
  });

  const std::size_t n_splits = spec.targets.size();
  std::vector<Micros> filled(n_splits, 0);
  std::vector<std::vector<std::size_t>> assigned(n_splits);
  std::vector<std::size_t> leftover;
  for (std::size_t gi : order) {
    const Group& g = groups[gi];
    std::optional<std::size_t> best;
    double best_fill = 0.0;
    for (std::size_t s = 0; s < n_splits; ++s) {
      if (filled[s] + g.duration > upper(s)) continue;
      const double fill = static_cast<double>(filled[s]) / static_cast<double>(target_us[s]);
      if (!best || fill < best_fill) {
        best = s;
        best_fill = fill;
      }
    }
    if (best) {
      filled[*best] += g.duration;
      assigned[*best].push_back(gi);
    } else {
      leftover.push_back(gi);
    }
  }

  SplitResult result;
  result.groups = groups.size();
  for (std::size_t gi : leftover) {
    if (filled[largest] + groups[gi].duration <= upper(largest)) {
      filled[largest] += groups[gi].duration;
      assigned[largest].push_back(gi);
    } else {
      for (std::size_t i : groups[gi].members) result.unassigned.push_back(utts[i]);
    }
  }

  for (std::size_t s = 0; s < n_splits; ++s) {
    const auto lower = static_cast<Micros>(
        std::ceil(static_cast<double>(target_us[s]) * (1.0 - spec.tolerance)));
    if (filled[s] < lower) {
      throw InsufficientData(
          fmt::format("split '{}' reached {:.4f} h of {:.4f} h", spec.targets[s].first,
                      ToHours(filled[s]), ToHours(target_us[s])),
          ToHours(lower - filled[s]));
    }
  }

  for (std::size_t s = 0; s < n_splits; ++s) {
    // Members in original manifest order.
    std::vector<std::size_t> members;
    for (std::size_t gi : assigned[s]) {
      members.insert(members.end(), groups[gi].members.begin(), groups[gi].members.end());
    }
    std::sort(members.begin(), members.end());
    Manifest m;
    m.provenance = {{"split", spec.targets[s].first},
                    {"target_hours", spec.targets[s].second},
                    {"seed", spec.seed}};
    for (std::size_t i : members) m.utterances.push_back(utts[i]);
    result.splits.emplace_back(spec.targets[s].first, std::move(m));
  }
  return result;
}

json SummaryJson(const SplitSpec& spec, const SplitResult& r) {
  json splits = json::object();
  for (std::size_t s = 0; s < r.splits.size(); ++s) {
    const auto& [name, m] = r.splits[s];
    splits[name] = {{"target_hours", spec.targets[s].second},
                    {"hours", m.total_hours()},
                    {"utterances", m.utterances.size()}};
  }
  return {{"splits", splits},
          {"groups", r.groups},
          {"unassigned", r.unassigned.size()},
          {"tolerance", spec.tolerance},
          {"exclusive_speakers", spec.exclusive_speakers},
          {"exclusive_transcripts", spec.exclusive_transcripts}};
}

// ---- mix -----------------------------------------------------------------

void MixSpec::Validate() const {
  std::vector<std::string> bad;
  if (!(real_hours >= 0.0)) bad.emplace_back("real_hours");
  if (!(synthetic_hours >= 0.0)) bad.emplace_back("synthetic_hours");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

std::string_view MixModeName(MixSpec::Mode m) {
  return m == MixSpec::Mode::kConstantTotal ? "constant_total" : "additive";
}

MixSpec::Mode ParseMixMode(std::string_view s) {
  if (s == "constant_total") return MixSpec::Mode::kConstantTotal;
  if (s == "additive") return MixSpec::Mode::kAdditive;
  throw ValidationError({"mode"});
}

json ToJson(const MixReport& r, const MixSpec& spec) {
  return {{"mode", MixModeName(spec.mode)},
          {"seed", spec.seed},
          {"real_hours_target", r.real_hours_target},
          {"synthetic_hours_target", r.synthetic_hours_target},
          {"real_hours", r.real_hours},
          {"synthetic_hours", r.synthetic_hours},
          {"real_count", r.real_count},
          {"synthetic_count", r.synthetic_count}};
}

std::vector<Utterance> SampleHours(const std::vector<Utterance>& source, double hours,
                                   std::uint64_t seed) {
  const Micros target = HoursToMicros(hours);
  if (target <= 0) return {};
  Micros available = 0;
  for (const auto& u : source) available += u.micros();
  if (available < target) {
    throw InsufficientData(fmt::format("source has {:.4f} h, {:.4f} h requested",
                                       ToHours(available), hours),
                           ToHours(target - available));
  }
  std::vector<std::size_t> order(source.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = MakeRng(seed);
  Shuffle(order.begin(), order.end(), rng);
  std::vector<Utterance> out;
  Micros acc = 0;
  for (std::size_t i : order) {
    if (acc >= target) break;
    out.push_back(source[i]);
    acc += source[i].micros();
  }
  return out;
}

std::pair<Manifest, MixReport> Mix(const Manifest& real, const Manifest& synthetic,
                                   const MixSpec& spec) {
  spec.Validate();
  // Both sources draw from the same derived stream, so the selection from
  // a source depends only on that source and its hour target.
  const std::uint64_t select_seed = DeriveSeed(spec.seed, "select");
  auto from_real = SampleHours(real.utterances, spec.real_hours, select_seed);
  auto from_synth = SampleHours(synthetic.utterances, spec.synthetic_hours, select_seed);

  MixReport report;
  report.real_hours_target = spec.real_hours;
  report.synthetic_hours_target = spec.synthetic_hours;
  report.real_count = from_real.size();
  report.synthetic_count = from_synth.size();
  Micros real_us = 0;
  Micros synth_us = 0;
  for (const auto& u : from_real) real_us += u.micros();
  for (const auto& u : from_synth) synth_us += u.micros();
  report.real_hours = ToHours(real_us);
  report.synthetic_hours = ToHours(synth_us);

  Manifest out;
  out.utterances = std::move(from_real);
  out.utterances.insert(out.utterances.end(), std::make_move_iterator(from_synth.begin()),
                        std::make_move_iterator(from_synth.end()));
  Rng rng = MakeRng(DeriveSeed(spec.seed, "interleave"));
  Shuffle(out.utterances.begin(), out.utterances.end(), rng);
  out.provenance = ToJson(report, spec);
  return {std::move(out), report};
}

std::map<std::string, Manifest> Disaggregate(const Manifest& manifest) {
  std::map<std::string, Manifest> out;
  for (const auto& u : manifest.utterances) {
    auto& bucket = out[std::string(GenderName(u.gender))];
    bucket.utterances.push_back(u);
  }
  for (auto& [gender, m] : out) m.provenance = {{"gender", gender}};
  return out;
}

}  // namespace synthcorpus::corpus
