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

#include "synthcorpus/tts_qc.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <future>
#include <optional>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "synthcorpus/audio_io.h"
#include "synthcorpus/error.h"
#include "synthcorpus/rng.h"
#include "synthcorpus/text.h"

namespace synthcorpus::tts_qc {

using nlohmann::json;

std::string_view VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kPending: return "pending";
    case Verdict::kKept: return "kept";
    case Verdict::kRemovedOutlier: return "removed_outlier";
  }
  return "pending";
}

Verdict ParseVerdict(std::string_view name) {
  if (name == "pending") return Verdict::kPending;
  if (name == "kept") return Verdict::kKept;
  if (name == "removed_outlier") return Verdict::kRemovedOutlier;
  throw ValidationError({"verdict"});
}

std::string_view RatioMeasureName(RatioMeasure m) {
  return m == RatioMeasure::kChars ? "chars" : "words";
}

RatioMeasure ParseRatioMeasure(std::string_view name) {
  if (name == "chars") return RatioMeasure::kChars;
  if (name == "words") return RatioMeasure::kWords;
  throw ValidationError({"ratio_measure"});
}

bool TtsCandidate::is_question() const { return text::IsQuestion(source_text); }

json ToJson(const TtsCandidate& c) {
  json j{{"utterance_id", c.utterance_id},
         {"source_text", c.source_text},
         {"audio", c.audio},
         {"retranscript", c.retranscript ? json(*c.retranscript) : json(nullptr)},
         {"length_ratio", c.length_ratio},
         {"verdict", VerdictName(c.verdict)}};
  return j;
}

TtsCandidate CandidateFromJson(const json& j) {
  TtsCandidate c;
  c.utterance_id = j.at("utterance_id").get<std::string>();
  c.source_text = j.at("source_text").get<std::string>();
  c.audio = j.value("audio", "");
  if (j.contains("retranscript") && j["retranscript"].is_string()) {
    c.retranscript = j["retranscript"].get<std::string>();
  }
  c.length_ratio = j.value("length_ratio", 0.0);
  c.verdict = ParseVerdict(j.value("verdict", c.retranscript ? "kept" : "pending"));
  return c;
}

std::size_t NormalizedLength(std::string_view s, RatioMeasure measure) {
  const std::string canonical = text::Canonical(s);
  return measure == RatioMeasure::kChars ? text::CodePointCount(canonical)
                                         : text::SplitWords(canonical).size();
}

double LengthRatio(std::string_view source, std::string_view retranscript,
                   RatioMeasure measure) {
  const std::size_t src = NormalizedLength(source, measure);
  if (src == 0) Throw(ErrorKind::kInvalidInput, "source text is empty after normalization");
  return static_cast<double>(NormalizedLength(retranscript, measure)) /
         static_cast<double>(src);
}

std::size_t ScoreCandidates(std::vector<TtsCandidate>& candidates, clients::ModelClient& asr,
                            RatioMeasure measure, const std::string& audio_root) {
  for (const auto& c : candidates) {
    if (NormalizedLength(c.source_text, measure) == 0) {
      Throw(ErrorKind::kInvalidInput,
            fmt::format("candidate '{}' has an empty source text", c.utterance_id));
    }
    if (c.audio.empty()) {
      Throw(ErrorKind::kInvalidInput,
            fmt::format("candidate '{}' has no audio", c.utterance_id));
    }
  }
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> pending{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < candidates.size(); i = next++) {
      TtsCandidate& c = candidates[i];
      try {
        std::filesystem::path path(c.audio);
        if (path.is_relative() && !audio_root.empty()) path = audio_root / path;
        const Audio audio = wav::Read(path.string());
        std::string transcript = asr.Transcribe(audio);
        c.length_ratio = LengthRatio(c.source_text, transcript, measure);
        c.retranscript = std::move(transcript);
        c.verdict = Verdict::kKept;
      } catch (const Error& e) {
        spdlog::warn("{}: left pending ({})", c.utterance_id, e.what());
        c.retranscript.reset();
        c.length_ratio = 0.0;
        c.verdict = Verdict::kPending;
        ++pending;
      }
    }
  };
  const auto n_workers = static_cast<std::size_t>(
      std::max(1, std::min<int>(asr.config().max_parallel,
                                static_cast<int>(std::max<std::size_t>(1, candidates.size())))));
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return pending.load();
}

SynthesisResult SynthesizeCandidates(const std::vector<textgen::SentencePair>& pairs,
                                     clients::ModelClient& tts, const std::string& out_dir,
                                     const std::string& subdir) {
  std::vector<std::optional<TtsCandidate>> done(pairs.size());
  std::vector<std::string> reasons(pairs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      const textgen::SentencePair& p = pairs[i];
      try {
        const Audio audio = tts.SynthesizeSpeech(p.target_text);
        const std::string rel = (std::filesystem::path(subdir) / (p.id + ".wav")).generic_string();
        wav::Write((std::filesystem::path(out_dir) / rel).string(), audio);
        TtsCandidate c;
        c.utterance_id = p.id;
        c.source_text = p.target_text;
        c.audio = rel;
        done[i] = std::move(c);
      } catch (const Error& e) {
        reasons[i] = e.what();
      }
    }
  };
  const auto n_workers = static_cast<std::size_t>(
      std::max(1, std::min<int>(tts.config().max_parallel,
                                static_cast<int>(std::max<std::size_t>(1, pairs.size())))));
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  SynthesisResult out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (done[i]) {
      out.candidates.push_back(std::move(*done[i]));
    } else {
      spdlog::warn("{}: synthesis failed ({})", pairs[i].id, reasons[i]);
      out.failures.push_back({pairs[i].id, reasons[i]});
    }
  }
  return out;
}

void FilterPolicy::Validate() const {
  std::vector<std::string> bad;
  if (bounds == Bounds::kFixed && !(fixed_lo >= 0.0 && fixed_lo < fixed_hi)) {
    bad.emplace_back("bounds");
  }
  if (bounds == Bounds::kMad && !(mad_k > 0.0)) bad.emplace_back("mad_k");
  if (!(degenerate_tolerance >= 0.0)) bad.emplace_back("degenerate_tolerance");
  if (!(question_share_target > 0.0 && question_share_target < 1.0)) {
    bad.emplace_back("question_share_target");
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

json ToJson(const FilterReport& r) {
  return json{{"scored", r.scored},
              {"kept", r.kept},
              {"removed", r.removed},
              {"pending", r.pending},
              {"removal_fraction", r.removal_fraction},
              {"lower_bound", r.lower_bound},
              {"upper_bound", r.upper_bound},
              {"median", r.median},
              {"mad", r.mad},
              {"degenerate_mad", r.degenerate_mad},
              {"histogram", {{"lo", r.hist_lo}, {"hi", r.hist_hi}, {"counts", r.histogram}}}};
}

namespace {

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

FilterResult FilterOutliers(const std::vector<TtsCandidate>& candidates,
                            const FilterPolicy& policy) {
  policy.Validate();
  FilterResult result;
  std::vector<double> ratios;
  for (const auto& c : candidates) {
    if (c.retranscript) ratios.push_back(c.length_ratio);
  }
  FilterReport& report = result.report;
  report.scored = ratios.size();

  if (policy.bounds == FilterPolicy::Bounds::kFixed) {
    report.lower_bound = policy.fixed_lo;
    report.upper_bound = policy.fixed_hi;
    if (!ratios.empty()) report.median = Median(ratios);
  } else {
    if (ratios.size() < 3) {
      throw InsufficientData("MAD bounds need at least 3 scored candidates",
                             static_cast<double>(3 - ratios.size()));
    }
    report.median = Median(ratios);
    std::vector<double> deviations;
    deviations.reserve(ratios.size());
    for (double r : ratios) deviations.push_back(std::abs(r - report.median));
    report.mad = kMadScale * Median(deviations);
    if (report.mad == 0.0) {
      report.degenerate_mad = true;
      report.lower_bound = report.median - policy.degenerate_tolerance;
      report.upper_bound = report.median + policy.degenerate_tolerance;
    } else {
      report.lower_bound = report.median - policy.mad_k * report.mad;
      report.upper_bound = report.median + policy.mad_k * report.mad;
    }
  }

  for (const auto& c : candidates) {
    TtsCandidate out = c;
    if (!c.retranscript) {
      out.verdict = Verdict::kPending;
      result.pending.push_back(std::move(out));
      continue;
    }
    const bool inside =
        c.length_ratio >= report.lower_bound && c.length_ratio <= report.upper_bound;
    out.verdict = inside ? Verdict::kKept : Verdict::kRemovedOutlier;
    (inside ? result.kept : result.removed).push_back(std::move(out));
  }
  report.kept = result.kept.size();
  report.removed = result.removed.size();
  report.pending = result.pending.size();
  report.removal_fraction =
      report.scored > 0 ? static_cast<double>(report.removed) / report.scored : 0.0;

  report.histogram.assign(20, 0);
  if (!ratios.empty()) {
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    report.hist_lo = *lo;
    report.hist_hi = *hi;
    const double width = (*hi - *lo) / 20.0;
    for (double r : ratios) {
      std::size_t bin = width > 0 ? static_cast<std::size_t>((r - *lo) / width) : 0;
      report.histogram[std::min<std::size_t>(bin, 19)]++;
    }
  }
  return result;
}

RebalanceResult RebalanceQuestions(const std::vector<bool>& is_question, double target_share,
                                   std::uint64_t seed) {
  if (!(target_share > 0.0 && target_share < 1.0)) {
    Throw(ErrorKind::kInvalidInput, "target share must lie in (0, 1)");
  }
  RebalanceResult r;
  std::vector<std::size_t> questions;
  for (std::size_t i = 0; i < is_question.size(); ++i) {
    if (is_question[i]) questions.push_back(i);
  }
  const std::size_t n_q = questions.size();
  const std::size_t n_other = is_question.size() - n_q;
  r.questions_before = n_q;

  auto keep_all = [&] {
    r.kept_indices.resize(is_question.size());
    for (std::size_t i = 0; i < is_question.size(); ++i) r.kept_indices[i] = i;
    r.questions_after = n_q;
    r.total_after = is_question.size();
  };

  const double share = is_question.empty() ? 0.0 : static_cast<double>(n_q) / is_question.size();
  if (share <= target_share) {
    if (share < target_share) {
      r.warning = fmt::format(
          "question share {:.4f} is below target {:.4f}; questions cannot be added", share,
          target_share);
      spdlog::warn("{}", r.warning);
    }
    keep_all();
    return r;
  }

  const auto want = static_cast<std::size_t>(
      std::llround(target_share * static_cast<double>(n_other) / (1.0 - target_share)));
  const std::size_t n_keep = std::min(want, n_q);
  Rng rng = MakeRng(seed);
  for (std::size_t i = 0; i < n_keep; ++i) {
    std::swap(questions[i], questions[i + UniformIndex(rng, n_q - i)]);
  }
  std::vector<bool> keep(is_question.size(), true);
  for (std::size_t i = n_keep; i < n_q; ++i) keep[questions[i]] = false;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) r.kept_indices.push_back(i);
  }
  r.questions_after = n_keep;
  r.total_after = r.kept_indices.size();
  r.changed = n_keep != n_q;
  return r;
}

std::vector<TtsCandidate> RebalanceQuestions(const std::vector<TtsCandidate>& kept,
                                             double target_share, std::uint64_t seed,
                                             RebalanceResult* info) {
  std::vector<bool> flags;
  flags.reserve(kept.size());
  for (const auto& c : kept) flags.push_back(c.is_question());
  RebalanceResult r = RebalanceQuestions(flags, target_share, seed);
  std::vector<TtsCandidate> out;
  out.reserve(r.kept_indices.size());
  for (std::size_t i : r.kept_indices) out.push_back(kept[i]);
  if (info != nullptr) *info = std::move(r);
  return out;
}

}  // namespace synthcorpus::tts_qc
