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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace synthcorpus::ratings {

enum class Modality { kText, kTtsAudio };

std::string_view ModalityName(Modality m);
Modality ParseModality(std::string_view name);

// One rater's judgment of one item. Text studies require the five text
// metrics; audio studies require intelligibility and naturalness_5.
struct RatingRecord {
  std::string item_id;
  std::string rater_id;
  std::string model_id;
  Modality modality = Modality::kText;
  std::optional<int> readability;    // 1-7
  std::optional<int> grammatical;    // 0/1
  std::optional<int> real_words;     // 0/1
  std::optional<int> notable_error;  // 0/1
  std::optional<int> adequacy;       // 1-7
  std::optional<int> intelligibility;  // 1-5
  std::optional<int> naturalness_5;    // 1-5

  bool operator==(const RatingRecord&) const = default;
};

enum class Metric {
  kReadability,
  kGrammatical,
  kRealWords,
  kNotableError,
  kAdequacy,
  kIntelligibility,
  kNaturalness5,
};

std::string_view MetricName(Metric m);
Metric ParseMetric(std::string_view name);
std::optional<int> MetricValue(const RatingRecord& r, Metric m);
const std::vector<Metric>& AllMetrics();

// Names of fields violating range or modality requirements; empty when valid.
std::vector<std::string> InvalidFields(const RatingRecord& r);
// Throws ValidationError listing InvalidFields(r).
void Validate(const RatingRecord& r);

inline constexpr std::string_view kCsvHeader =
    "item_id,rater_id,model_id,modality,readability,grammatical,real_words,"
    "notable_error,adequacy,intelligibility,naturalness_5";

std::string ToCsv(const std::vector<RatingRecord>& records);
// Validates every row; throws ValidationError prefixed with the row number.
std::vector<RatingRecord> FromCsv(std::string_view csv);
std::vector<RatingRecord> ReadCsv(const std::string& path);

nlohmann::json ToJson(const RatingRecord& r);
RatingRecord RatingFromJson(const nlohmann::json& j);

// ---- summaries -----------------------------------------------------------

struct MetricSummary {
  Metric metric = Metric::kReadability;
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // n-1 denominator; 0 when n == 1
};

// Throws EmptyGroup on an empty span.
MetricSummary SummarizeValues(std::span<const double> values, Metric metric);

struct GroupSummary {
  std::string language;
  std::string model_id;
  std::vector<MetricSummary> metrics;  // only metrics with at least one value
};

// Groups by model_id; |language| labels the whole rating set.
std::vector<GroupSummary> Summarize(const std::vector<RatingRecord>& ratings,
                                    std::string_view language);
nlohmann::json ToJson(const std::vector<GroupSummary>& summary);
std::string FormatMeanStd(const MetricSummary& s);  // "1.55 ± 0.70"

// ---- two-way ANOVA -------------------------------------------------------

struct AnovaRow {
  std::string source;
  double sum_of_squares = 0.0;
  double df = 0.0;
  double mean_square = 0.0;
  double f = 0.0;
  double p = 1.0;
};

struct AnovaTable {
  AnovaRow model;     // "LLM"
  AnovaRow rater;     // "RaterID"
  AnovaRow residual;  // "Residual"
  double total_ss = 0.0;
  std::size_t n = 0;
};

// Main-effects linear model y ~ A + B with Type II sums of squares.
// Throws InvalidInput for fewer than two levels per factor or no residual
// degrees of freedom; DegenerateDesign when the factors are confounded.
AnovaTable AnovaTwoWay(const std::vector<std::string>& factor_model,
                       const std::vector<std::string>& factor_rater,
                       const std::vector<double>& response);
AnovaTable AnovaTwoWay(const std::vector<RatingRecord>& ratings,
                       Metric response = Metric::kReadability);
nlohmann::json ToJson(const AnovaTable& t);

// Upper tail of the F distribution.
double FSurvival(double f, double df1, double df2);

// ---- rater bootstrap -----------------------------------------------------

struct RaterBootstrapOptions {
  std::size_t n_sentences = 50;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  Metric metric = Metric::kReadability;
};

struct RaterBootstrapPoint {
  std::size_t n_raters = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t iterations_used = 0;

  double width() const { return ci_high - ci_low; }
};

// Each iteration draws n_raters raters with replacement and n_sentences
// items without replacement, then averages every available rating in the
// sample. CI bounds are the 2.5th/97.5th percentiles.
std::vector<RaterBootstrapPoint> RaterBootstrap(const std::vector<RatingRecord>& ratings,
                                                std::string_view model_id,
                                                const std::vector<std::size_t>& rater_grid,
                                                const RaterBootstrapOptions& options);
nlohmann::json ToJson(const std::vector<RaterBootstrapPoint>& points);

// Linear-interpolation percentile (type 7) of unsorted data, q in [0, 1].
double Percentile(std::vector<double> values, double q);

// ---- ICC(2,k) ------------------------------------------------------------

// rows = sentences, columns = raters.
using RatingMatrix = std::vector<std::vector<std::optional<double>>>;

enum class IccBand { kPoor, kModerate, kGood, kExcellent };
std::string_view IccBandName(IccBand band);
// < 0.5 poor, [0.5, 0.75) moderate, [0.75, 0.9] good, > 0.9 excellent.
IccBand InterpretIcc(double icc);

struct MeanSquares {
  double rows = 0.0;
  double cols = 0.0;
  double error = 0.0;
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
};

// Throws IncompleteMatrix on missing cells unless |listwise_deletion|, in
// which case rows with any missing cell are dropped first.
MeanSquares ComputeMeanSquares(const RatingMatrix& m, bool listwise_deletion = false);

// Shrout-Fleiss two-way random effects, average of k raters:
// (MSR - MSE) / (MSR + (MSC - MSE) / n). NaN when the denominator is 0.
double Icc2k(const RatingMatrix& m, bool listwise_deletion = false);

struct IccValue {
  double icc = 0.0;
  IccBand band = IccBand::kPoor;
};
IccValue Icc2kInterpreted(const RatingMatrix& m, bool listwise_deletion = false);

struct LabeledMatrix {
  std::vector<std::string> sentence_ids;
  std::vector<std::string> rater_ids;
  RatingMatrix values;
};

LabeledMatrix BuildMatrix(const std::vector<RatingRecord>& ratings, std::string_view model_id,
                          Metric metric = Metric::kReadability);

struct IccCell {
  std::size_t n_raters = 0;
  std::size_t n_sentences = 0;
  double mean_icc = 0.0;
  std::size_t valid_draws = 0;
};

struct IccGridResult {
  std::vector<IccCell> cells;  // raters-major order
  std::size_t iterations = 1000;
  // Smallest (n_raters, n_sentences) cell, raters first, with mean >= 0.5.
  std::optional<IccCell> threshold_cell;
};

struct IccGridOptions {
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  bool listwise_deletion = false;
  double threshold = 0.5;
};

// Per cell, averages ICC(2,k) over random draws of raters and sentences
// (both without replacement). Draws with an undefined ICC are skipped.
IccGridResult IccGrid(const RatingMatrix& m, const std::vector<std::size_t>& rater_grid,
                      const std::vector<std::size_t>& sentence_grid,
                      const IccGridOptions& options);
nlohmann::json ToJson(const IccGridResult& r);

}  // namespace synthcorpus::ratings
