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

#include "synthcorpus/model_clients.h"
#include "synthcorpus/textgen.h"

namespace synthcorpus::tts_qc {

enum class Verdict { kPending, kKept, kRemovedOutlier };
std::string_view VerdictName(Verdict v);
Verdict ParseVerdict(std::string_view name);

enum class RatioMeasure { kChars, kWords };
std::string_view RatioMeasureName(RatioMeasure m);
RatioMeasure ParseRatioMeasure(std::string_view name);

struct TtsCandidate {
  std::string utterance_id;
  std::string source_text;
  std::string audio;  // path to the synthesized WAV
  std::optional<std::string> retranscript;
  double length_ratio = 0.0;
  Verdict verdict = Verdict::kPending;

  bool is_question() const;
};

nlohmann::json ToJson(const TtsCandidate& c);
TtsCandidate CandidateFromJson(const nlohmann::json& j);

// Length after trim / whitespace collapse / casefold, in code points
// (spaces included) or whitespace-separated words.
std::size_t NormalizedLength(std::string_view s, RatioMeasure measure);

// length(retranscript) / length(source). Throws InvalidInput when the
// source normalizes to nothing.
double LengthRatio(std::string_view source, std::string_view retranscript,
                   RatioMeasure measure = RatioMeasure::kChars);

// Transcribes each candidate's audio and fills retranscript/length_ratio.
// Per-item ASR failures leave the candidate pending and are logged.
// Runs up to the endpoint's max_parallel items concurrently. Returns the
// number of candidates left pending.
std::size_t ScoreCandidates(std::vector<TtsCandidate>& candidates, clients::ModelClient& asr,
                            RatioMeasure measure = RatioMeasure::kChars,
                            const std::string& audio_root = {});

struct SynthesisFailure {
  std::string utterance_id;
  std::string reason;
};

struct SynthesisResult {
  std::vector<TtsCandidate> candidates;  // input order, verdict pending
  std::vector<SynthesisFailure> failures;
};

// Synthesizes each pair's target text and writes <out_dir>/<subdir>/<id>.wav.
// Candidate audio paths are relative to |out_dir|. Failed items are
// reported and produce no candidate.
SynthesisResult SynthesizeCandidates(const std::vector<textgen::SentencePair>& pairs,
                                     clients::ModelClient& tts, const std::string& out_dir,
                                     const std::string& subdir = "audio");

struct FilterPolicy {
  enum class Bounds { kMad, kFixed };
  RatioMeasure ratio_measure = RatioMeasure::kChars;
  Bounds bounds = Bounds::kMad;
  double mad_k = 3.5;
  // Used when the MAD is zero: keep ratios within this distance of the median.
  double degenerate_tolerance = 0.05;
  double fixed_lo = 0.0;
  double fixed_hi = 0.0;
  double question_share_target = 0.25;

  void Validate() const;
};

inline constexpr double kMadScale = 1.4826;

struct FilterReport {
  std::size_t scored = 0;
  std::size_t kept = 0;
  std::size_t removed = 0;
  std::size_t pending = 0;
  double removal_fraction = 0.0;  // removed / scored
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double median = 0.0;
  double mad = 0.0;  // scaled
  bool degenerate_mad = false;
  // 20 equal-width bins over [hist_lo, hist_hi].
  double hist_lo = 0.0;
  double hist_hi = 0.0;
  std::vector<std::size_t> histogram;
};

nlohmann::json ToJson(const FilterReport& r);

struct FilterResult {
  std::vector<TtsCandidate> kept;
  std::vector<TtsCandidate> removed;
  std::vector<TtsCandidate> pending;
  FilterReport report;
};

// MAD policy keeps |ratio - median| <= k * 1.4826 * MAD. Throws
// InsufficientData with fewer than 3 scored candidates under MAD.
FilterResult FilterOutliers(const std::vector<TtsCandidate>& candidates,
                            const FilterPolicy& policy);

struct RebalanceResult {
  std::vector<std::size_t> kept_indices;  // into the input, ascending
  std::size_t questions_before = 0;
  std::size_t questions_after = 0;
  std::size_t total_after = 0;
  bool changed = false;
  std::string warning;
};

// Subsamples questions uniformly so their share drops to |target_share|
// (rounded to the nearest item). Non-questions are always kept. A share at
// or below target is a no-op with a warning when it is below.
RebalanceResult RebalanceQuestions(const std::vector<bool>& is_question, double target_share,
                                   std::uint64_t seed);
std::vector<TtsCandidate> RebalanceQuestions(const std::vector<TtsCandidate>& kept,
                                             double target_share, std::uint64_t seed,
                                             RebalanceResult* info = nullptr);

}  // namespace synthcorpus::tts_qc
