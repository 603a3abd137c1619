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

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace synthcorpus::asr_eval {

// Text normalization applied to both references and hypotheses before
// scoring. Steps run in a fixed order: casefold, apostrophe folding,
// punctuation stripping, listed diacritic folding, contraction splitting,
// whitespace collapsing. Apply() is idempotent.
struct Normalizer {
  enum class DiacriticMode { kKeep, kStripListed };

  bool lowercase = true;
  std::string strip_punct = DefaultPunctuation();
  // Fold ’ ‘ ʼ ` ´ to an ASCII apostrophe.
  bool apostrophe_fold = true;
  // Treat a word-internal apostrophe as a word boundary (za'a -> za a).
  bool split_contractions = false;
  DiacriticMode diacritic_mode = DiacriticMode::kKeep;
  // Longest match wins; keys may span several characters (ng').
  std::map<std::string, std::string> diacritic_map = DefaultDiacriticMap();

  static std::string DefaultPunctuation();
  static std::map<std::string, std::string> DefaultDiacriticMap();

  std::string Apply(std::string_view s) const;
  // Short stable identifier of the configuration, recorded in reports.
  std::string Id() const;
};

nlohmann::json ToJson(const Normalizer& n);
Normalizer NormalizerFromJson(const nlohmann::json& j);

enum class EditOp { kMatch, kSub, kDel, kIns };
char EditOpCode(EditOp op);  // M S D I

struct Alignment {
  std::size_t distance = 0;
  std::vector<EditOp> ops;
};

// Levenshtein alignment with unit costs. On ties the backtrace prefers
// match, then substitution, then deletion, then insertion.
template <typename T>
Alignment EditAlign(std::span<const T> ref, std::span<const T> hyp);

extern template Alignment EditAlign<std::string>(std::span<const std::string>,
                                                 std::span<const std::string>);
extern template Alignment EditAlign<char32_t>(std::span<const char32_t>,
                                              std::span<const char32_t>);
extern template Alignment EditAlign<int>(std::span<const int>, std::span<const int>);

std::vector<std::string> WordTokens(std::string_view normalized);
std::u32string CharTokens(std::string_view normalized, bool include_spaces);

struct ItemErrors {
  std::size_t word_errors = 0;
  std::size_t word_ref = 0;
  std::size_t char_errors = 0;
  std::size_t char_ref = 0;
};

struct ScoreOptions {
  Normalizer normalizer;
  bool cer_include_spaces = false;
};

std::vector<ItemErrors> ScoreItems(const std::vector<std::string>& refs,
                                   const std::vector<std::string>& hyps,
                                   const ScoreOptions& options);

// Pooled over the corpus: total edits / total reference tokens. Throws
// InvalidInput on length mismatch or empty input and EmptyReference when
// the references hold no tokens.
double Wer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps,
           const Normalizer& normalizer = {});
double Cer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps,
           const Normalizer& normalizer = {}, bool include_spaces = false);

struct BootstrapStats {
  std::size_t iterations = 0;
  double wer_mean = 0.0;
  double wer_std = 0.0;
  double cer_mean = 0.0;
  double cer_std = 0.0;
  // Mean share of distinct items per resample (about 0.632 for large n).
  double mean_unique_fraction = 0.0;
};

struct GroupReport {
  std::size_t n_items = 0;
  double wer = 0.0;
  double cer = 0.0;
  BootstrapStats bootstrap;
};

struct EvalReport {
  std::size_t n_items = 0;
  double wer = 0.0;
  double cer = 0.0;
  BootstrapStats bootstrap;
  std::map<std::string, GroupReport> per_group;
  std::string normalizer_id;
  std::vector<std::string> warnings;
};

nlohmann::json ToJson(const EvalReport& r);

struct BootstrapOptions {
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
};

// Resamples n items with replacement per iteration and records the pooled
// WER/CER of each resample; mean and sample std are reported.
BootstrapStats Bootstrap(std::span<const ItemErrors> items, const BootstrapOptions& options);

EvalReport BootstrapEval(const std::vector<std::string>& refs,
                         const std::vector<std::string>& hyps, const ScoreOptions& score,
                         const BootstrapOptions& boot);

// Overall report plus one bootstrap report per group label. Labels listed
// in |expected_groups| that have no items are omitted with a warning.
EvalReport EvalByGroup(const std::vector<std::string>& refs,
                       const std::vector<std::string>& hyps,
                       const std::vector<std::string>& groups, const ScoreOptions& score,
                       const BootstrapOptions& boot,
                       const std::vector<std::string>& expected_groups = {});

// ---- error analysis ------------------------------------------------------

struct WordAlignment {
  std::vector<std::string> ref;
  std::vector<std::string> hyp;
  Alignment alignment;
};

std::vector<WordAlignment> AlignCorpus(const std::vector<std::string>& refs,
                                       const std::vector<std::string>& hyps,
                                       const Normalizer& normalizer);

struct SamplePair {
  std::string reference;
  std::string hypothesis;
};

struct InventoryRow {
  std::string word;
  std::size_t occurrences = 0;
  std::size_t times_correct = 0;
  bool always_failed = false;
  std::vector<SamplePair> samples;  // at most 3
};

struct ErrorInventory {
  std::vector<InventoryRow> rows;
};

// Reference words that were missed at least once, always-failed words
// first, then by occurrences (descending) and word.
ErrorInventory BuildErrorInventory(const std::vector<std::string>& refs,
                                   const std::vector<std::string>& hyps,
                                   const Normalizer& normalizer, std::size_t top_k);
nlohmann::json ToJson(const ErrorInventory& inv);

inline constexpr std::string_view kAdjudicationHeader =
    "language,evaluation_transcript,model_output,assessment,comments";

struct AdjudicationRow {
  std::string language;
  std::string evaluation_transcript;
  std::string model_output;
  std::string assessment;
  std::string comments;

  bool operator==(const AdjudicationRow&) const = default;
};

// One row per inventory row (its first sample pair), blank assessment.
std::vector<AdjudicationRow> AdjudicationRows(const ErrorInventory& inv,
                                              std::string_view language);
std::string AdjudicationCsv(const std::vector<AdjudicationRow>& rows);
// Throws IoError when the path cannot be written.
void ExportAdjudication(const ErrorInventory& inv, std::string_view language,
                        const std::string& path);
std::vector<AdjudicationRow> ImportAdjudication(std::string_view csv);

}  // namespace synthcorpus::asr_eval
