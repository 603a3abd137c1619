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

#include "synthcorpus/rating_analysis.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <fmt/format.h>

#include "synthcorpus/csv.h"
#include "synthcorpus/error.h"
#include "synthcorpus/io.h"
#include "synthcorpus/rng.h"

namespace synthcorpus::ratings {

using nlohmann::json;

std::string_view ModalityName(Modality m) {
  return m == Modality::kText ? "text" : "tts_audio";
}

Modality ParseModality(std::string_view name) {
  if (name == "text") return Modality::kText;
  if (name == "tts_audio" || name == "audio") return Modality::kTtsAudio;
  throw ValidationError({"modality"});
}

std::string_view MetricName(Metric m) {
  switch (m) {
    case Metric::kReadability: return "readability";
    case Metric::kGrammatical: return "grammatical";
    case Metric::kRealWords: return "real_words";
    case Metric::kNotableError: return "notable_error";
    case Metric::kAdequacy: return "adequacy";
    case Metric::kIntelligibility: return "intelligibility";
    case Metric::kNaturalness5: return "naturalness_5";
  }
  return "readability";
}

const std::vector<Metric>& AllMetrics() {
  static const std::vector<Metric> kAll = {
      Metric::kReadability,  Metric::kGrammatical,     Metric::kRealWords,
      Metric::kNotableError, Metric::kAdequacy,        Metric::kIntelligibility,
      Metric::kNaturalness5};
  return kAll;
}

Metric ParseMetric(std::string_view name) {
  for (Metric m : AllMetrics()) {
    if (MetricName(m) == name) return m;
  }
  throw ValidationError({std::string(name)});
}

std::optional<int> MetricValue(const RatingRecord& r, Metric m) {
  switch (m) {
    case Metric::kReadability: return r.readability;
    case Metric::kGrammatical: return r.grammatical;
    case Metric::kRealWords: return r.real_words;
    case Metric::kNotableError: return r.notable_error;
    case Metric::kAdequacy: return r.adequacy;
    case Metric::kIntelligibility: return r.intelligibility;
    case Metric::kNaturalness5: return r.naturalness_5;
  }
  return std::nullopt;
}

namespace {

struct Range {
  int lo;
  int hi;
};

Range MetricRange(Metric m) {
  switch (m) {
    case Metric::kReadability:
    case Metric::kAdequacy:
      return {1, 7};
    case Metric::kGrammatical:
    case Metric::kRealWords:
    case Metric::kNotableError:
      return {0, 1};
    case Metric::kIntelligibility:
    case Metric::kNaturalness5:
      return {1, 5};
  }
  return {0, 0};
}

bool RequiredFor(Metric m, Modality modality) {
  const bool audio_metric = m == Metric::kIntelligibility || m == Metric::kNaturalness5;
  return modality == Modality::kText ? !audio_metric : audio_metric;
}

}  // namespace

std::vector<std::string> InvalidFields(const RatingRecord& r) {
  std::vector<std::string> bad;
  if (r.item_id.empty()) bad.emplace_back("item_id");
  if (r.rater_id.empty()) bad.emplace_back("rater_id");
  for (Metric m : AllMetrics()) {
    const auto v = MetricValue(r, m);
    const Range range = MetricRange(m);
    if (v) {
      if (*v < range.lo || *v > range.hi) bad.emplace_back(MetricName(m));
    } else if (RequiredFor(m, r.modality)) {
      bad.emplace_back(MetricName(m));
    }
  }
  return bad;
}

void Validate(const RatingRecord& r) {
  auto bad = InvalidFields(r);
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

namespace {

std::string OptToString(const std::optional<int>& v) {
  return v ? std::to_string(*v) : std::string();
}

std::optional<int> ParseOptInt(const std::string& s, std::string_view field) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return std::nullopt;
  std::size_t e = s.find_last_not_of(" \t");
  int v = 0;
  const char* first = s.data() + b;
  const char* last = s.data() + e + 1;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    // Accept integral floats such as "6.0".
    double d = 0;
    std::istringstream in(std::string(first, last));
    if (in >> d && in.eof() && d == std::floor(d)) return static_cast<int>(d);
    throw ValidationError({std::string(field)});
  }
  return v;
}

}  // namespace

std::string ToCsv(const std::vector<RatingRecord>& records) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    csv::WriteRow(os, {r.item_id, r.rater_id, r.model_id, std::string(ModalityName(r.modality)),
                       OptToString(r.readability), OptToString(r.grammatical),
                       OptToString(r.real_words), OptToString(r.notable_error),
                       OptToString(r.adequacy), OptToString(r.intelligibility),
                       OptToString(r.naturalness_5)});
  }
  return os.str();
}

std::vector<RatingRecord> FromCsv(std::string_view data) {
  const csv::Table table = csv::Table::FromString(data);
  const std::size_t c_item = table.RequireColumn("item_id");
  const std::size_t c_rater = table.RequireColumn("rater_id");
  const std::size_t c_model = table.RequireColumn("model_id");
  const auto c_modality = table.Column("modality");
  std::vector<std::pair<Metric, std::optional<std::size_t>>> metric_cols;
  for (Metric m : AllMetrics()) metric_cols.emplace_back(m, table.Column(MetricName(m)));

  std::vector<RatingRecord> out;
  out.reserve(table.rows().size());
  std::size_t row_no = 1;
  for (const auto& row : table.rows()) {
    ++row_no;
    RatingRecord r;
    r.item_id = row[c_item];
    r.rater_id = row[c_rater];
    r.model_id = row[c_model];
    try {
      r.modality = c_modality && !row[*c_modality].empty() ? ParseModality(row[*c_modality])
                                                           : Modality::kText;
      for (const auto& [m, col] : metric_cols) {
        if (!col) continue;
        const auto v = ParseOptInt(row[*col], MetricName(m));
        switch (m) {
          case Metric::kReadability: r.readability = v; break;
          case Metric::kGrammatical: r.grammatical = v; break;
          case Metric::kRealWords: r.real_words = v; break;
          case Metric::kNotableError: r.notable_error = v; break;
          case Metric::kAdequacy: r.adequacy = v; break;
          case Metric::kIntelligibility: r.intelligibility = v; break;
          case Metric::kNaturalness5: r.naturalness_5 = v; break;
        }
      }
      Validate(r);
    } catch (const ValidationError& e) {
      std::vector<std::string> fields;
      for (const auto& f : e.fields()) fields.push_back(fmt::format("row {}: {}", row_no, f));
      throw ValidationError(std::move(fields));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RatingRecord> ReadCsv(const std::string& path) { return FromCsv(io::ReadFile(path)); }

json ToJson(const RatingRecord& r) {
  json j{{"item_id", r.item_id},
         {"rater_id", r.rater_id},
         {"model_id", r.model_id},
         {"modality", ModalityName(r.modality)}};
  for (Metric m : AllMetrics()) {
    if (auto v = MetricValue(r, m)) j[std::string(MetricName(m))] = *v;
  }
  return j;
}

RatingRecord RatingFromJson(const json& j) {
  RatingRecord r;
  r.item_id = j.value("item_id", "");
  r.rater_id = j.value("rater_id", "");
  r.model_id = j.value("model_id", "");
  r.modality = ParseModality(j.value("modality", "text"));
  std::vector<std::string> bad;
  auto get = [&](Metric m) -> std::optional<int> {
    const std::string name(MetricName(m));
    if (!j.contains(name) || j[name].is_null()) return std::nullopt;
    if (!j[name].is_number_integer()) {
      bad.push_back(name);
      return std::nullopt;
    }
    return j[name].get<int>();
  };
  r.readability = get(Metric::kReadability);
  r.grammatical = get(Metric::kGrammatical);
  r.real_words = get(Metric::kRealWords);
  r.notable_error = get(Metric::kNotableError);
  r.adequacy = get(Metric::kAdequacy);
  r.intelligibility = get(Metric::kIntelligibility);
  r.naturalness_5 = get(Metric::kNaturalness5);
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return r;
}

// ---- summaries -----------------------------------------------------------

MetricSummary SummarizeValues(std::span<const double> values, Metric metric) {
  if (values.empty()) {
    Throw(ErrorKind::kEmptyGroup, fmt::format("no values for {}", MetricName(metric)));
  }
  MetricSummary s;
  s.metric = metric;
  s.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

std::vector<GroupSummary> Summarize(const std::vector<RatingRecord>& ratings,
                                    std::string_view language) {
  if (ratings.empty()) Throw(ErrorKind::kEmptyGroup, "no ratings to summarize");
  std::map<std::string, std::vector<const RatingRecord*>> groups;
  for (const auto& r : ratings) groups[r.model_id].push_back(&r);
  std::vector<GroupSummary> out;
  for (const auto& [model, rows] : groups) {
    GroupSummary g;
    g.language = language;
    g.model_id = model;
    for (Metric m : AllMetrics()) {
      std::vector<double> values;
      for (const auto* r : rows) {
        if (auto v = MetricValue(*r, m)) values.push_back(*v);
      }
      if (!values.empty()) g.metrics.push_back(SummarizeValues(values, m));
    }
    out.push_back(std::move(g));
  }
  return out;
}

json ToJson(const std::vector<GroupSummary>& summary) {
  json out = json::array();
  for (const auto& g : summary) {
    json metrics = json::object();
    for (const auto& m : g.metrics) {
      metrics[std::string(MetricName(m.metric))] = {
          {"n", m.n}, {"mean", m.mean}, {"std", m.std}, {"display", FormatMeanStd(m)}};
    }
    out.push_back({{"language", g.language}, {"model_id", g.model_id}, {"metrics", metrics}});
  }
  return out;
}

std::string FormatMeanStd(const MetricSummary& s) {
  return fmt::format("{:.2f} ± {:.2f}", s.mean, s.std);
}

// ---- two-way ANOVA -------------------------------------------------------

double FSurvival(double f, double df1, double df2) {
  if (!(f > 0.0) || !std::isfinite(df1) || !std::isfinite(df2)) return 1.0;
  if (std::isinf(f)) return 0.0;
  boost::math::fisher_f_distribution<double> dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, f));
}

namespace {

struct Fit {
  double rss = 0.0;
  Eigen::Index rank = 0;
};

Fit LeastSquares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  const Eigen::VectorXd beta = qr.solve(y);
  return {(y - x * beta).squaredNorm(), qr.rank()};
}

std::vector<int> Encode(const std::vector<std::string>& factor, std::size_t* levels) {
  std::map<std::string, int> index;
  for (const auto& v : factor) index.emplace(v, 0);
  int next = 0;
  for (auto& [_, i] : index) i = next++;
  std::vector<int> codes;
  codes.reserve(factor.size());
  for (const auto& v : factor) codes.push_back(index[v]);
  *levels = index.size();
  return codes;
}

// Intercept plus treatment-coded dummies (first level is the baseline).
Eigen::MatrixXd Design(std::size_t n, const std::vector<const std::vector<int>*>& factors,
                       const std::vector<std::size_t>& levels) {
  Eigen::Index cols = 1;
  for (std::size_t l : levels) cols += static_cast<Eigen::Index>(l) - 1;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), cols);
  x.col(0).setOnes();
  Eigen::Index offset = 1;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const auto& codes = *factors[f];
    for (std::size_t i = 0; i < n; ++i) {
      if (codes[i] > 0) x(static_cast<Eigen::Index>(i), offset + codes[i] - 1) = 1.0;
    }
    offset += static_cast<Eigen::Index>(levels[f]) - 1;
  }
  return x;
}

AnovaRow MakeRow(std::string source, double ss, double df, double ms_error, double df_error) {
  AnovaRow row;
  row.source = std::move(source);
  row.sum_of_squares = ss;
  row.df = df;
  row.mean_square = df > 0 ? ss / df : 0.0;
  if (ss == 0.0) {
    row.f = 0.0;
    row.p = 1.0;
  } else if (ms_error == 0.0) {
    row.f = std::numeric_limits<double>::infinity();
    row.p = 0.0;
  } else {
    row.f = row.mean_square / ms_error;
    row.p = FSurvival(row.f, df, df_error);
  }
  return row;
}

}  // namespace

AnovaTable AnovaTwoWay(const std::vector<std::string>& factor_model,
                       const std::vector<std::string>& factor_rater,
                       const std::vector<double>& response) {
  const std::size_t n = response.size();
  if (factor_model.size() != n || factor_rater.size() != n) {
    Throw(ErrorKind::kInvalidInput, "factor and response lengths differ");
  }
  std::size_t a = 0;
  std::size_t b = 0;
  const auto codes_a = Encode(factor_model, &a);
  const auto codes_b = Encode(factor_rater, &b);
  if (a < 2 || b < 2) {
    Throw(ErrorKind::kInvalidInput,
          fmt::format("need at least two levels per factor (LLM {}, RaterID {})", a, b));
  }
  const double p_full = 1.0 + static_cast<double>(a - 1) + static_cast<double>(b - 1);
  const double df_error = static_cast<double>(n) - p_full;
  if (df_error < 1.0) Throw(ErrorKind::kInvalidInput, "no residual degrees of freedom");

  AnovaTable t;
  t.n = n;
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = response[i];
  const double mean = y.mean();
  t.total_ss = (y.array() - mean).square().sum();

  const Eigen::MatrixXd x_full = Design(n, {&codes_a, &codes_b}, {a, b});
  const Fit full = LeastSquares(x_full, y);
  if (full.rank < x_full.cols()) {
    Throw(ErrorKind::kDegenerateDesign,
          "LLM and RaterID are confounded; the main-effects design is singular");
  }
  const bool constant = std::all_of(response.begin(), response.end(),
                                    [&](double v) { return v == response.front(); });
  double ss_a = 0.0;
  double ss_b = 0.0;
  double rss = 0.0;
  if (constant) {
    t.total_ss = 0.0;
  } else {
    const Fit only_b = LeastSquares(Design(n, {&codes_b}, {b}), y);
    const Fit only_a = LeastSquares(Design(n, {&codes_a}, {a}), y);
    rss = full.rss;
    ss_a = only_b.rss - full.rss;
    ss_b = only_a.rss - full.rss;
    // Round-off below this scale is reported as exactly zero.
    const double eps = 1e-12 * t.total_ss;
    if (ss_a < eps) ss_a = 0.0;
    if (ss_b < eps) ss_b = 0.0;
    if (rss < eps) rss = 0.0;
  }
  const double ms_error = rss / df_error;
  t.model = MakeRow("LLM", ss_a, static_cast<double>(a - 1), ms_error, df_error);
  t.rater = MakeRow("RaterID", ss_b, static_cast<double>(b - 1), ms_error, df_error);
  t.residual.source = "Residual";
  t.residual.sum_of_squares = rss;
  t.residual.df = df_error;
  t.residual.mean_square = ms_error;
  t.residual.f = 0.0;
  t.residual.p = 1.0;
  return t;
}

AnovaTable AnovaTwoWay(const std::vector<RatingRecord>& ratings, Metric response) {
  std::vector<std::string> models;
  std::vector<std::string> raters;
  std::vector<double> y;
  for (const auto& r : ratings) {
    if (auto v = MetricValue(r, response)) {
      models.push_back(r.model_id);
      raters.push_back(r.rater_id);
      y.push_back(*v);
    }
  }
  return AnovaTwoWay(models, raters, y);
}

namespace {

json RowJson(const AnovaRow& r) {
  auto num = [](double v) -> json {
    if (std::isinf(v)) return "inf";
    return v;
  };
  return {{"source", r.source},
          {"sum_of_squares", r.sum_of_squares},
          {"df", r.df},
          {"mean_square", r.mean_square},
          {"F", num(r.f)},
          {"p", r.p}};
}

}  // namespace

json ToJson(const AnovaTable& t) {
  return {{"rows", {RowJson(t.model), RowJson(t.rater), RowJson(t.residual)}},
          {"total_ss", t.total_ss},
          {"n", t.n},
          {"rater_ss_exceeds_model_ss", t.rater.sum_of_squares > t.model.sum_of_squares}};
}

// ---- rater bootstrap -----------------------------------------------------

double Percentile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<RaterBootstrapPoint> RaterBootstrap(const std::vector<RatingRecord>& ratings,
                                                std::string_view model_id,
                                                const std::vector<std::size_t>& rater_grid,
                                                const RaterBootstrapOptions& options) {
  const LabeledMatrix lm = BuildMatrix(ratings, model_id, options.metric);
  const std::size_t n_sent = lm.sentence_ids.size();
  const std::size_t n_raters = lm.rater_ids.size();
  if (n_raters == 0) {
    Throw(ErrorKind::kInvalidInput, fmt::format("no raters for model '{}'", model_id));
  }
  if (options.n_sentences == 0 || options.n_sentences > n_sent) {
    Throw(ErrorKind::kInvalidInput,
          fmt::format("n_sentences {} exceeds the {} rated sentences", options.n_sentences,
                      n_sent));
  }
  for (std::size_t g : rater_grid) {
    if (g == 0) Throw(ErrorKind::kInvalidInput, "rater grid values must be positive");
  }

  std::vector<RaterBootstrapPoint> out;
  std::vector<std::size_t> sentence_order(n_sent);
  for (std::size_t g : rater_grid) {
    Rng rng = MakeRng(DeriveSeed(options.seed, static_cast<std::uint64_t>(g)));
    std::vector<double> means;
    means.reserve(options.iterations);
    std::vector<std::size_t> raters(g);
    for (std::size_t it = 0; it < options.iterations; ++it) {
      for (auto& r : raters) r = UniformIndex(rng, n_raters);
      for (std::size_t i = 0; i < n_sent; ++i) sentence_order[i] = i;
      for (std::size_t i = 0; i < options.n_sentences; ++i) {
        std::swap(sentence_order[i], sentence_order[i + UniformIndex(rng, n_sent - i)]);
      }
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t si = 0; si < options.n_sentences; ++si) {
        const auto& row = lm.values[sentence_order[si]];
        for (std::size_t r : raters) {
          if (row[r]) {
            sum += *row[r];
            ++count;
          }
        }
      }
      if (count > 0) means.push_back(sum / static_cast<double>(count));
    }
    RaterBootstrapPoint p;
    p.n_raters = g;
    p.iterations_used = means.size();
    if (!means.empty()) {
      double total = 0.0;
      for (double m : means) total += m;
      p.mean = total / static_cast<double>(means.size());
      p.ci_low = Percentile(means, 0.025);
      p.ci_high = Percentile(means, 0.975);
    }
    out.push_back(p);
  }
  return out;
}

json ToJson(const std::vector<RaterBootstrapPoint>& points) {
  json out = json::array();
  for (const auto& p : points) {
    out.push_back({{"n_raters", p.n_raters},
                   {"mean", p.mean},
                   {"ci95_low", p.ci_low},
                   {"ci95_high", p.ci_high},
                   {"ci_width", p.width()},
                   {"iterations_used", p.iterations_used}});
  }
  return out;
}

// ---- ICC(2,k) ------------------------------------------------------------

std::string_view IccBandName(IccBand band) {
  switch (band) {
    case IccBand::kPoor: return "poor";
    case IccBand::kModerate: return "moderate";
    case IccBand::kGood: return "good";
    case IccBand::kExcellent: return "excellent";
  }
  return "poor";
}

IccBand InterpretIcc(double icc) {
  if (!(icc >= 0.5)) return IccBand::kPoor;
  if (icc < 0.75) return IccBand::kModerate;
  if (icc <= 0.9) return IccBand::kGood;
  return IccBand::kExcellent;
}

MeanSquares ComputeMeanSquares(const RatingMatrix& m, bool listwise_deletion) {
  std::vector<const std::vector<std::optional<double>>*> rows;
  const std::size_t k = m.empty() ? 0 : m.front().size();
  for (const auto& row : m) {
    if (row.size() != k) Throw(ErrorKind::kIncompleteMatrix, "ragged rating matrix");
    const bool complete = std::all_of(row.begin(), row.end(), [](const auto& v) {
      return v.has_value();
    });
    if (!complete) {
      if (!listwise_deletion) {
        Throw(ErrorKind::kIncompleteMatrix, "rating matrix has missing cells");
      }
      continue;
    }
    rows.push_back(&row);
  }
  const std::size_t n = rows.size();
  if (n < 2 || k < 2) {
    Throw(ErrorKind::kInvalidInput,
          fmt::format("ICC needs at least 2 complete rows and 2 raters (have {}x{})", n, k));
  }
  double grand = 0.0;
  std::vector<double> row_mean(n, 0.0);
  std::vector<double> col_mean(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double v = *(*rows[i])[j];
      row_mean[i] += v;
      col_mean[j] += v;
      grand += v;
    }
  }
  for (auto& v : row_mean) v /= static_cast<double>(k);
  for (auto& v : col_mean) v /= static_cast<double>(n);
  grand /= static_cast<double>(n * k);

  double ss_rows = 0.0;
  double ss_cols = 0.0;
  double ss_error = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss_rows += (row_mean[i] - grand) * (row_mean[i] - grand);
  for (std::size_t j = 0; j < k; ++j) ss_cols += (col_mean[j] - grand) * (col_mean[j] - grand);
  ss_rows *= static_cast<double>(k);
  ss_cols *= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double e = *(*rows[i])[j] - row_mean[i] - col_mean[j] + grand;
      ss_error += e * e;
    }
  }
  MeanSquares ms;
  ms.n_rows = n;
  ms.n_cols = k;
  ms.rows = ss_rows / static_cast<double>(n - 1);
  ms.cols = ss_cols / static_cast<double>(k - 1);
  ms.error = ss_error / static_cast<double>((n - 1) * (k - 1));
  return ms;
}

double Icc2k(const RatingMatrix& m, bool listwise_deletion) {
  const MeanSquares ms = ComputeMeanSquares(m, listwise_deletion);
  const double denom = ms.rows + (ms.cols - ms.error) / static_cast<double>(ms.n_rows);
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (ms.rows - ms.error) / denom;
}

IccValue Icc2kInterpreted(const RatingMatrix& m, bool listwise_deletion) {
  IccValue v;
  v.icc = Icc2k(m, listwise_deletion);
  v.band = InterpretIcc(v.icc);
  return v;
}

LabeledMatrix BuildMatrix(const std::vector<RatingRecord>& ratings, std::string_view model_id,
                          Metric metric) {
  std::set<std::string> sentences;
  std::set<std::string> raters;
  for (const auto& r : ratings) {
    if (r.model_id != model_id || !MetricValue(r, metric)) continue;
    sentences.insert(r.item_id);
    raters.insert(r.rater_id);
  }
  LabeledMatrix lm;
  lm.sentence_ids.assign(sentences.begin(), sentences.end());
  lm.rater_ids.assign(raters.begin(), raters.end());
  std::map<std::string, std::size_t> s_index;
  std::map<std::string, std::size_t> r_index;
  for (std::size_t i = 0; i < lm.sentence_ids.size(); ++i) s_index[lm.sentence_ids[i]] = i;
  for (std::size_t j = 0; j < lm.rater_ids.size(); ++j) r_index[lm.rater_ids[j]] = j;
  lm.values.assign(lm.sentence_ids.size(),
                   std::vector<std::optional<double>>(lm.rater_ids.size()));
  for (const auto& r : ratings) {
    if (r.model_id != model_id) continue;
    if (auto v = MetricValue(r, metric)) {
      lm.values[s_index[r.item_id]][r_index[r.rater_id]] = *v;
    }
  }
  return lm;
}

IccGridResult IccGrid(const RatingMatrix& m, const std::vector<std::size_t>& rater_grid,
                      const std::vector<std::size_t>& sentence_grid,
                      const IccGridOptions& options) {
  // Drop incomplete rows up front (or fail) so every draw is complete.
  RatingMatrix data;
  for (const auto& row : m) {
    const bool complete =
        std::all_of(row.begin(), row.end(), [](const auto& v) { return v.has_value(); });
    if (!complete) {
      if (!options.listwise_deletion) {
        Throw(ErrorKind::kIncompleteMatrix, "rating matrix has missing cells");
      }
      continue;
    }
    data.push_back(row);
  }
  const std::size_t n_rows = data.size();
  const std::size_t n_cols = data.empty() ? 0 : data.front().size();
  auto check_axis = [](const std::vector<std::size_t>& axis, std::size_t limit,
                       std::string_view name) {
    if (axis.empty()) Throw(ErrorKind::kInvalidInput, fmt::format("{} grid is empty", name));
    for (std::size_t i = 0; i < axis.size(); ++i) {
      if (axis[i] < 2 || axis[i] > limit) {
        Throw(ErrorKind::kInvalidInput,
              fmt::format("{} grid value {} outside [2, {}]", name, axis[i], limit));
      }
      if (i > 0 && axis[i] <= axis[i - 1]) {
        Throw(ErrorKind::kInvalidInput, fmt::format("{} grid must be strictly increasing", name));
      }
    }
  };
  check_axis(rater_grid, n_cols, "rater");
  check_axis(sentence_grid, n_rows, "sentence");

  IccGridResult result;
  result.iterations = options.iterations;
  std::vector<std::size_t> row_order(n_rows);
  std::vector<std::size_t> col_order(n_cols);
  std::uint64_t cell_index = 0;
  for (std::size_t k : rater_grid) {
    for (std::size_t s : sentence_grid) {
      Rng rng = MakeRng(DeriveSeed(options.seed, cell_index++));
      double total = 0.0;
      std::size_t valid = 0;
      RatingMatrix sub(s, std::vector<std::optional<double>>(k));
      for (std::size_t it = 0; it < options.iterations; ++it) {
        for (std::size_t i = 0; i < n_cols; ++i) col_order[i] = i;
        for (std::size_t i = 0; i < k; ++i) {
          std::swap(col_order[i], col_order[i + UniformIndex(rng, n_cols - i)]);
        }
        for (std::size_t i = 0; i < n_rows; ++i) row_order[i] = i;
        for (std::size_t i = 0; i < s; ++i) {
          std::swap(row_order[i], row_order[i + UniformIndex(rng, n_rows - i)]);
        }
        for (std::size_t i = 0; i < s; ++i) {
          for (std::size_t j = 0; j < k; ++j) sub[i][j] = data[row_order[i]][col_order[j]];
        }
        const double icc = Icc2k(sub);
        if (std::isfinite(icc)) {
          total += icc;
          ++valid;
        }
      }
      IccCell cell;
      cell.n_raters = k;
      cell.n_sentences = s;
      cell.valid_draws = valid;
      cell.mean_icc = valid > 0 ? total / static_cast<double>(valid)
                                : std::numeric_limits<double>::quiet_NaN();
      if (!result.threshold_cell && valid > 0 && cell.mean_icc >= options.threshold) {
        result.threshold_cell = cell;
      }
      result.cells.push_back(cell);
    }
  }
  return result;
}

json ToJson(const IccGridResult& r) {
  auto cell_json = [](const IccCell& c) {
    json j{{"n_raters", c.n_raters},
           {"n_sentences", c.n_sentences},
           {"valid_draws", c.valid_draws}};
    if (std::isfinite(c.mean_icc)) {
      j["mean_icc"] = c.mean_icc;
      j["band"] = IccBandName(InterpretIcc(c.mean_icc));
    } else {
      j["mean_icc"] = nullptr;
    }
    return j;
  };
  json cells = json::array();
  for (const auto& c : r.cells) cells.push_back(cell_json(c));
  return {{"iterations", r.iterations},
          {"cells", cells},
          {"threshold_cell", r.threshold_cell ? cell_json(*r.threshold_cell) : json(nullptr)}};
}

}  // namespace synthcorpus::ratings
