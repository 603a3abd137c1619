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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace synthcorpus::corpus {

enum class Gender { kMale, kFemale, kUnknown };
std::string_view GenderName(Gender g);
// Accepts male/m/female/f (any case); anything else is unknown.
Gender ParseGender(std::string_view s);

enum class Origin { kReal, kSynthetic };
std::string_view OriginName(Origin o);
Origin ParseOrigin(std::string_view s);

// Durations are accounted in integer microseconds so sums are exact.
using Micros = std::int64_t;
Micros ToMicros(double seconds);
double ToHours(Micros us);
Micros HoursToMicros(double hours);

struct Utterance {
  std::string id;
  std::string transcript;
  std::string audio;  // relative path
  double duration = 0.0;  // seconds
  std::string speaker_id;
  Gender gender = Gender::kUnknown;
  Origin origin = Origin::kReal;
  std::string dataset_tag;
  std::optional<std::string> hypothesis;

  Micros micros() const { return ToMicros(duration); }
  bool operator==(const Utterance&) const = default;
};

// Throws ValidationError naming the bad fields.
void Validate(const Utterance& u);

nlohmann::json ToJson(const Utterance& u);
Utterance UtteranceFromJson(const nlohmann::json& j);

inline constexpr std::string_view kManifestSchema = "synthcorpus.manifest";
inline constexpr int kManifestVersion = 1;

struct Manifest {
  std::vector<Utterance> utterances;
  nlohmann::json provenance = nlohmann::json::object();

  Micros total_micros() const;
  double total_hours() const { return ToHours(total_micros()); }
};

// JSONL: a header line {"schema","version","provenance"} then one
// Utterance per line.
std::string ToJsonl(const Manifest& m);
Manifest ManifestFromJsonl(std::string_view data);
Manifest ReadManifest(const std::string& path);
void WriteManifest(const std::string& path, const Manifest& m);

// Generic CSV importer: path,transcript,speaker,gender,duration.
Manifest ImportCsv(std::string_view csv, std::string_view dataset_tag,
                   Origin origin = Origin::kReal);

// ---- split ---------------------------------------------------------------

struct SplitSpec {
  // Split name -> target hours, in declaration order.
  std::vector<std::pair<std::string, double>> targets;
  bool exclusive_speakers = true;
  bool exclusive_transcripts = true;
  double tolerance = 0.02;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct SplitResult {
  std::vector<std::pair<std::string, Manifest>> splits;  // same order as targets
  std::vector<Utterance> unassigned;
  std::size_t groups = 0;
};

nlohmann::json SummaryJson(const SplitSpec& spec, const SplitResult& r);

// Groups utterances connected by a shared speaker and/or normalized
// transcript, then packs whole groups greedily (longest first) onto the
// split that is least filled relative to its target. Groups that would push
// every split past target*(1+tolerance) are offered to the largest split
// and otherwise left unassigned.
//
// Throws InsufficientData when the corpus is shorter than the targets or a
// split ends below target*(1-tolerance); UnsplittableGroup when one group is
// longer than the largest target allows.
SplitResult Split(const Manifest& manifest, const SplitSpec& spec);

// ---- mix -----------------------------------------------------------------

struct MixSpec {
  enum class Mode { kConstantTotal, kAdditive };
  Mode mode = Mode::kConstantTotal;
  double real_hours = 0.0;
  double synthetic_hours = 0.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

std::string_view MixModeName(MixSpec::Mode m);
MixSpec::Mode ParseMixMode(std::string_view s);

struct MixReport {
  double real_hours_target = 0.0;
  double synthetic_hours_target = 0.0;
  double real_hours = 0.0;
  double synthetic_hours = 0.0;
  std::size_t real_count = 0;
  std::size_t synthetic_count = 0;
};

nlohmann::json ToJson(const MixReport& r, const MixSpec& spec);

// Uniform sample from |source| until |hours| is reached; the utterance that
// crosses the target is included. Depends only on the source and the seed.
std::vector<Utterance> SampleHours(const std::vector<Utterance>& source, double hours,
                                   std::uint64_t seed);

std::pair<Manifest, MixReport> Mix(const Manifest& real, const Manifest& synthetic,
                                   const MixSpec& spec);

// ---- disaggregation ------------------------------------------------------

std::map<std::string, Manifest> Disaggregate(const Manifest& manifest);

}  // namespace synthcorpus::corpus
