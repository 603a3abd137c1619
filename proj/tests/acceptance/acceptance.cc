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

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Tolerances are fixed below; oracles are written here
// without calling the routines they check.

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "corpus_fixtures.h"
#include "pipeline.h"
#include "stub_models.h"
#include "synthcorpus/asr_eval.h"
#include "synthcorpus/audio_augment.h"
#include "synthcorpus/corpus.h"
#include "synthcorpus/csv.h"
#include "synthcorpus/dedup.h"
#include "synthcorpus/io.h"
#include "synthcorpus/rating_analysis.h"
#include "synthcorpus/rng.h"
#include "synthcorpus/tts_qc.h"
#include "test_support.h"

namespace synthcorpus::acceptance {
namespace {

constexpr double kUniqueFractionTol = 0.01;
constexpr double kUniqueSeconds = 5.0;
constexpr double kEditOracleSeconds = 30.0;
constexpr double kSnrTolDb = 0.01;
constexpr double kLevelTolDb = 0.01;
constexpr double kAugSnrMeanTol = 1.5;
constexpr double kAugLevelMeanTol = 0.5;
constexpr double kSplitTol = 0.02;
constexpr double kIccOracleTol = 1e-9;
constexpr double kIccGridTol = 0.02;
constexpr double kAnovaTol = 1e-9;
// Exhaustive curve points: the oracle sums subsets in bitmask order, the
// library in combination order, so only rounding may differ.
constexpr double kCurveTol = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using testing::TempDir;

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- bootstrap -----------------------------------------------------------------

Outcome BootstrapUniqueness() {
  const std::size_t m = 1000;
  const double expected = 1.0 - std::pow(1.0 - 1.0 / m, static_cast<double>(m));
  std::vector<asr_eval::ItemErrors> items;
  for (std::size_t i = 0; i < m; ++i) items.push_back({i % 4, 6, i % 9, 25});
  const auto t0 = std::chrono::steady_clock::now();
  const auto stats = asr_eval::Bootstrap(items, {1000, 2024});
  const double secs = Seconds(t0);
  const bool ok = std::abs(stats.mean_unique_fraction - expected) <= kUniqueFractionTol && secs < kUniqueSeconds;
  return {ok, fmt::format("mean unique fraction {:.4f} vs {:.4f}, {:.2f} s", stats.mean_unique_fraction,
                          expected, secs)};
}

Outcome DegenerateBootstrap() {
  const std::vector<std::string> refs(60, "ina son ruwa sosai");
  const std::vector<std::string> hyps(60, "ina so ruwa");
  const auto r = asr_eval::BootstrapEval(refs, hyps, {}, {1000, 7});
  const bool ok = r.bootstrap.wer_std == 0.0 && r.bootstrap.wer_mean == r.wer && r.bootstrap.cer_std == 0.0;
  return {ok, fmt::format("wer {} mean {} std {}", r.wer, r.bootstrap.wer_mean, r.bootstrap.wer_std)};
}

// ---- edit distance -------------------------------------------------------------

// Fewest single-token edits turning |from| into |to|, by breadth-first search
// over every reachable sequence no longer than the longer input.
int ExhaustiveDistance(const std::string& from, const std::string& to) {
  static const std::string alphabet = "abc";
  const std::size_t cap = std::max(from.size(), to.size());
  std::map<std::string, int> seen{{from, 0}};
  std::deque<std::string> queue{from};
  while (!queue.empty()) {
    const std::string cur = queue.front();
    queue.pop_front();
    const int d = seen[cur];
    if (cur == to) return d;
    std::vector<std::string> next;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      next.push_back(cur.substr(0, i) + cur.substr(i + 1));
      for (char c : alphabet) {
        if (c == cur[i]) continue;
        std::string s = cur;
        s[i] = c;
        next.push_back(s);
      }
    }
    if (cur.size() < cap) {
      for (std::size_t i = 0; i <= cur.size(); ++i) {
        for (char c : alphabet) next.push_back(cur.substr(0, i) + c + cur.substr(i));
      }
    }
    for (auto& s : next) {
      if (seen.emplace(s, d + 1).second) queue.push_back(std::move(s));
    }
  }
  return -1;
}

std::string Spaced(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (!out.empty()) out += ' ';
    out += c;
  }
  return out;
}

Outcome EditDistanceOracle() {
  std::mt19937 gen(611);
  std::uniform_int_distribution<int> len(0, 6), sym(0, 2);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> refs, hyps;
  std::vector<int> oracle;
  while (refs.size() < 500) {
    std::string a(static_cast<std::size_t>(len(gen)), 'a'), b(static_cast<std::size_t>(len(gen)), 'a');
    for (auto& c : a) c = static_cast<char>('a' + sym(gen));
    for (auto& c : b) c = static_cast<char>('a' + sym(gen));
    if (a.empty()) continue;  // WER needs reference tokens
    refs.push_back(Spaced(a));
    hyps.push_back(Spaced(b));
    oracle.push_back(ExhaustiveDistance(a, b));
  }
  const auto items = asr_eval::ScoreItems(refs, hyps, {});
  std::size_t word_mismatch = 0, char_mismatch = 0, align_mismatch = 0;
  std::size_t errors = 0, ref_tokens = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (static_cast<int>(items[i].word_errors) != oracle[i]) ++word_mismatch;
    if (static_cast<int>(items[i].char_errors) != oracle[i]) ++char_mismatch;
    const auto r = asr_eval::WordTokens(refs[i]);
    const auto h = asr_eval::WordTokens(hyps[i]);
    const auto al = asr_eval::EditAlign<std::string>(r, h);
    if (static_cast<int>(al.distance) != oracle[i]) ++align_mismatch;
    errors += static_cast<std::size_t>(oracle[i]);
    ref_tokens += r.size();
  }
  const double wer = asr_eval::Wer(refs, hyps);
  const double expected_wer = static_cast<double>(errors) / static_cast<double>(ref_tokens);
  const double secs = Seconds(t0);
  const bool ok = word_mismatch == 0 && char_mismatch == 0 && align_mismatch == 0 && wer == expected_wer &&
                  secs < kEditOracleSeconds;
  return {ok, fmt::format("500 pairs, mismatches word {} char {} align {}, pooled WER {:.6f} vs {:.6f}, {:.2f} s",
                          word_mismatch, char_mismatch, align_mismatch, wer, expected_wer, secs)};
}

// ---- audio ---------------------------------------------------------------------

std::vector<float> RandomWave(Rng& rng, std::size_t n, double scale) {
  std::vector<float> x(n);
  const double f = 80.0 + static_cast<double>(UniformIndex(rng, 3000));
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<float>(scale * (0.5 * std::sin(2.0 * M_PI * f * static_cast<double>(i) / 16000.0) +
                                       0.25 * StandardNormal(rng)));
  }
  return x;
}

double PowerDb(const std::vector<double>& x) {
  double p = 0.0;
  for (double v : x) p += v * v;
  return 10.0 * std::log10(p / static_cast<double>(x.size()));
}

Outcome SnrAndLevelFidelity() {
  Rng rng = MakeRng(404);
  double worst_snr = 0.0, worst_level = 0.0;
  int unclamped = 0;
  for (int t = 0; t < 100; ++t) {
    const auto signal = RandomWave(rng, 1000 + UniformIndex(rng, 30000), 0.2 + 0.05 * UniformIndex(rng, 10));
    const auto noise = RandomWave(rng, 300 + UniformIndex(rng, 30000), 0.4);
    const double snr = -5.0 + 70.0 * static_cast<double>(UniformIndex(rng, 1000000)) / 1e6;
    const auto mix = augment::MixAtSnr(signal, noise, snr);
    std::vector<double> s(signal.begin(), signal.end()), n(signal.size());
    for (std::size_t i = 0; i < s.size(); ++i) n[i] = static_cast<double>(mix.samples[i]) - s[i];
    worst_snr = std::max(worst_snr, std::abs(PowerDb(s) - PowerDb(n) - snr));

    const double target = -35.0 + 30.0 * static_cast<double>(UniformIndex(rng, 1000)) / 1000.0;
    const auto lv = augment::SetLevel(signal, target);
    if (lv.peak_clamped) continue;
    ++unclamped;
    const std::vector<double> out(lv.samples.begin(), lv.samples.end());
    worst_level = std::max(worst_level, std::abs(PowerDb(out) - target));
  }
  const bool ok = worst_snr <= kSnrTolDb && worst_level <= kLevelTolDb && unclamped > 0;
  return {ok, fmt::format("worst SNR error {:.2e} dB, worst level error {:.2e} dB over {} unclamped", worst_snr,
                          worst_level, unclamped)};
}

Outcome AugmentDistribution() {
  TempDir dir("acc_aug");
  std::filesystem::create_directories(dir.path() / "noise");
  Rng rng = MakeRng(31);
  for (int k = 0; k < 4; ++k) {
    Audio noise;
    noise.samples = RandomWave(rng, 2000, 0.3);
    wav::Write(dir / fmt::format("noise/n{}.wav", k), noise);
  }
  corpus::Manifest m;
  const Audio clip = testing::Sine(330.0, 0.2, 0.01);
  wav::Write(dir / "clip.wav", clip);
  for (int i = 0; i < 1000; ++i) {
    corpus::Utterance u;
    u.id = fmt::format("u{:04d}", i);
    u.transcript = "x";
    u.audio = "clip.wav";
    u.duration = 0.01;
    m.utterances.push_back(u);
  }
  augment::AugmentPolicy policy;
  policy.noise_bank = dir / "noise";
  policy.seed = 2025;
  const auto [out, log] = augment::AugmentCorpus(m, policy, {dir.path().string(), dir / "out"});
  double snr = 0.0, level = 0.0;
  for (const auto& e : log.entries) {
    snr += e.snr;
    level += e.level;
  }
  const double n = static_cast<double>(log.entries.size());
  snr /= n;
  level /= n;
  const bool ok = log.entries.size() == 1000 && std::abs(snr - policy.snr_mean) <= kAugSnrMeanTol &&
                  std::abs(level - policy.amp_mean) <= kAugLevelMeanTol;
  return {ok, fmt::format("{} logged, mean SNR {:.3f} dB, mean level {:.3f} dBFS", log.entries.size(), snr, level)};
}

// ---- corpus --------------------------------------------------------------------

Outcome SplitExclusivity() {
  const corpus::Manifest m = testing::SplitFixture(77, 200);
  corpus::SplitSpec spec;
  spec.targets = {{"train", 0.1}, {"dev", 0.03}, {"test", 0.03}};
  spec.tolerance = kSplitTol;
  spec.seed = 19;
  const auto r = corpus::Split(m, spec);
  const auto check = testing::CheckSplit(m, r.splits, r.unassigned, {spec.targets.begin(), spec.targets.end()});
  return {check.ok(kSplitTol),
          fmt::format("speaker overlaps {}, transcript overlaps {}, worst duration error {:.4f}",
                      check.speaker_overlaps, check.transcript_overlaps, check.worst_relative_error)};
}

// ---- TTS quality control -------------------------------------------------------

Outcome QuestionRebalancing() {
  std::vector<bool> flags(500, false);
  Rng rng = MakeRng(12);
  std::vector<std::size_t> order(flags.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < 200; ++i) flags[order[i]] = true;
  const auto r = tts_qc::RebalanceQuestions(flags, 0.25, 3);
  std::size_t q = 0, statements = 0;
  for (std::size_t i : r.kept_indices) (flags[i] ? q : statements) += 1;
  const double total = static_cast<double>(r.kept_indices.size());
  const double off = std::abs(static_cast<double>(q) - 0.25 * total);
  const bool ok = statements == 300 && off <= 1.0;
  return {ok, fmt::format("{} of {} questions kept, {} items total, {:.1f} items from 25%", q, 200, total, off)};
}

Outcome HallucinationFilter() {
  std::vector<tts_qc::TtsCandidate> cs;
  for (int i = 0; i <= 100; ++i) {
    tts_qc::TtsCandidate c;
    c.utterance_id = i == 57 ? "outlier" : fmt::format("c{}", i);
    c.source_text = "abc";
    c.retranscript = "abc";
    c.length_ratio = i == 57 ? 3.0 : 1.0;
    cs.push_back(c);
  }
  const auto r = tts_qc::FilterOutliers(cs, {});
  const bool ok = r.removed.size() == 1 && r.removed[0].utterance_id == "outlier" && r.kept.size() == 100;
  return {ok, fmt::format("removed {} ({}), kept {}", r.removed.size(),
                          r.removed.empty() ? "-" : r.removed[0].utterance_id, r.kept.size())};
}

// ---- ratings -------------------------------------------------------------------

ratings::RatingMatrix ToMatrix(const std::vector<std::vector<double>>& v) {
  ratings::RatingMatrix m;
  for (const auto& row : v) {
    m.emplace_back();
    for (double x : row) m.back().emplace_back(x);
  }
  return m;
}

// ICC(2,k) from mean squares written out longhand.
double OracleIcc(const std::vector<std::vector<double>>& x) {
  const double n = static_cast<double>(x.size()), k = static_cast<double>(x[0].size());
  double grand = 0.0;
  for (const auto& row : x) {
    for (double v : row) grand += v;
  }
  grand /= n * k;
  double ssr = 0.0, ssc = 0.0, sst = 0.0;
  for (const auto& row : x) {
    double mean = 0.0;
    for (double v : row) mean += v / k;
    ssr += k * (mean - grand) * (mean - grand);
  }
  for (std::size_t j = 0; j < x[0].size(); ++j) {
    double mean = 0.0;
    for (const auto& row : x) mean += row[j] / n;
    ssc += n * (mean - grand) * (mean - grand);
  }
  for (const auto& row : x) {
    for (double v : row) sst += (v - grand) * (v - grand);
  }
  const double msr = ssr / (n - 1.0), msc = ssc / (k - 1.0);
  const double mse = (sst - ssr - ssc) / ((n - 1.0) * (k - 1.0));
  return (msr - mse) / (msr + (msc - mse) / n);
}

double ExhaustiveGridMean(const std::vector<std::vector<double>>& x, std::size_t k, std::size_t s) {
  double total = 0.0;
  int valid = 0;
  const std::size_t rows = x.size(), cols = x[0].size();
  for (unsigned cm = 0; cm < (1u << cols); ++cm) {
    if (static_cast<std::size_t>(__builtin_popcount(cm)) != k) continue;
    for (unsigned rm = 0; rm < (1u << rows); ++rm) {
      if (static_cast<std::size_t>(__builtin_popcount(rm)) != s) continue;
      std::vector<std::vector<double>> sub;
      for (std::size_t i = 0; i < rows; ++i) {
        if (!(rm >> i & 1)) continue;
        sub.emplace_back();
        for (std::size_t j = 0; j < cols; ++j) {
          if (cm >> j & 1) sub.back().push_back(x[i][j]);
        }
      }
      const double v = OracleIcc(sub);
      if (std::isfinite(v)) {
        total += v;
        ++valid;
      }
    }
  }
  return total / valid;
}

Outcome IccCorrectness() {
  const double perfect = ratings::Icc2k(ToMatrix({{2, 2, 2}, {5, 5, 5}, {3, 3, 3}, {7, 7, 7}}));
  // 9 2 5 / 6 1 3 / 8 4 6: MSR 52/9, MSC 193/9, MSE 5.5/9, ICC = 93/229.
  const double hand = ratings::Icc2k(ToMatrix({{9, 2, 5}, {6, 1, 3}, {8, 4, 6}}));
  const double hand_err = std::abs(hand - 93.0 / 229.0);
  const std::vector<std::vector<double>> fixture{{2, 3, 2}, {5, 6, 6}, {4, 4, 5}, {7, 6, 7}};
  ratings::IccGridOptions opt;
  opt.seed = 41;
  const auto grid = ratings::IccGrid(ToMatrix(fixture), {2, 3}, {2, 3, 4}, opt);
  double worst_grid = 0.0;
  for (const auto& c : grid.cells) {
    worst_grid = std::max(worst_grid, std::abs(c.mean_icc - ExhaustiveGridMean(fixture, c.n_raters, c.n_sentences)));
  }
  const bool ok = perfect == 1.0 && hand_err <= kIccOracleTol && worst_grid <= kIccGridTol;
  return {ok, fmt::format("perfect agreement {}, 3x3 error {:.1e}, worst grid gap {:.4f}", perfect, hand_err,
                          worst_grid)};
}

// Residual sum of squares of y on an intercept plus the given 0/1 columns,
// by Gaussian elimination on the normal equations.
double Rss(const std::vector<std::vector<double>>& dummies, const std::vector<double>& y) {
  const std::size_t p = dummies.size() + 1, n = y.size();
  auto col = [&](std::size_t c, std::size_t r) { return c == 0 ? 1.0 : dummies[c - 1][r]; };
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < p; ++j) a[i][j] += col(i, r) * col(j, r);
      a[i][p] += col(i, r) * y[r];
    }
  }
  for (std::size_t c = 0; c < p; ++c) {
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j <= p; ++j) a[r][j] -= f * a[c][j];
    }
  }
  double rss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double fit = 0.0;
    for (std::size_t i = 0; i < p; ++i) fit += col(i, r) * a[i][p] / a[i][i];
    rss += (y[r] - fit) * (y[r] - fit);
  }
  return rss;
}

Outcome AnovaCorrectness() {
  std::vector<std::string> model, rater;
  std::vector<double> y;
  std::vector<double> is_b, is_r2;
  const double jitter[] = {0.4, -0.1, 0.2, -0.3, 0.15, -0.05, 0.1, 0.3, -0.25, 0.05, -0.2, 0.35, 0.0, -0.15, 0.25, -0.4};
  int k = 0;
  for (int mi = 0; mi < 2; ++mi) {
    for (int ri = 0; ri < 2; ++ri) {
      for (int rep = 0; rep < 4; ++rep) {
        model.push_back(mi ? "B" : "A");
        rater.push_back(ri ? "r2" : "r1");
        is_b.push_back(mi);
        is_r2.push_back(ri);
        y.push_back(4.0 + 1.25 * mi - 0.5 * ri + jitter[k++]);
      }
    }
  }
  const double rss_full = Rss({is_b, is_r2}, y);
  const double ss_model = Rss({is_r2}, y) - rss_full;
  const double ss_rater = Rss({is_b}, y) - rss_full;
  const double df_e = static_cast<double>(y.size()) - 3.0;
  const double f_model = ss_model / (rss_full / df_e);
  const double f_rater = ss_rater / (rss_full / df_e);
  const auto t = ratings::AnovaTwoWay(model, rater, y);
  const double worst = std::max({std::abs(t.model.sum_of_squares - ss_model), std::abs(t.rater.sum_of_squares - ss_rater),
                                 std::abs(t.residual.sum_of_squares - rss_full),
                                 std::abs(t.model.f - f_model) / std::max(1.0, f_model),
                                 std::abs(t.rater.f - f_rater) / std::max(1.0, f_rater)});
  const auto flat = ratings::AnovaTwoWay(model, rater, std::vector<double>(y.size(), 3.0));
  const bool constant_zero =
      flat.model.sum_of_squares == 0.0 && flat.rater.sum_of_squares == 0.0 && flat.residual.sum_of_squares == 0.0;
  return {worst <= kAnovaTol && constant_zero,
          fmt::format("worst SS/F deviation {:.1e}, constant response zero sums {}", worst, constant_zero)};
}

ratings::RatingRecord Rating(std::size_t item, std::size_t rater, int v) {
  ratings::RatingRecord r;
  r.item_id = fmt::format("s{}", item);
  r.rater_id = fmt::format("r{}", rater);
  r.model_id = "m";
  r.readability = v;
  return r;
}

Outcome RaterBootstrapNarrowing() {
  std::vector<ratings::RatingRecord> same;
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t r = 0; r < 5; ++r) same.push_back(Rating(i, r, 1 + static_cast<int>(i % 7)));
  }
  ratings::RaterBootstrapOptions opt;
  opt.n_sentences = 30;
  opt.seed = 5;
  double identical_width = 0.0;
  for (const auto& p : ratings::RaterBootstrap(same, "m", {1, 2, 3, 4, 5}, opt)) {
    identical_width = std::max(identical_width, p.width());
  }

  std::mt19937 gen(77);
  std::normal_distribution<double> bias(0.0, 1.0), noise(0.0, 0.7);
  std::vector<double> rater_bias(8);
  for (auto& b : rater_bias) b = bias(gen);
  std::vector<ratings::RatingRecord> noisy;
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t r = 0; r < 8; ++r) {
      const double v = std::clamp(3.5 + static_cast<double>(i % 3) + rater_bias[r] + noise(gen), 1.0, 7.0);
      noisy.push_back(Rating(i, r, static_cast<int>(std::lround(v))));
    }
  }
  opt.n_sentences = 50;
  opt.seed = 6;
  const auto points = ratings::RaterBootstrap(noisy, "m", {1, 2, 3, 4, 5, 6, 7, 8}, opt);
  bool monotone = true;
  std::string widths;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0 && points[i].width() > points[i - 1].width()) monotone = false;
    widths += fmt::format("{}{:.3f}", i ? " " : "", points[i].width());
  }
  return {identical_width == 0.0 && monotone,
          fmt::format("identical raters width {}, noisy widths {}", identical_width, widths)};
}

// ---- dedup ---------------------------------------------------------------------

Outcome UniquenessCurve() {
  Rng rng = MakeRng(8080);
  auto random_batches = [&](std::size_t n, std::size_t pool) {
    dedup::BatchedSentences b;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> s;
      const std::size_t size = 2 + UniformIndex(rng, 7);
      for (std::size_t j = 0; j < size; ++j) s.push_back(fmt::format("zance {}", UniformIndex(rng, pool)));
      b.emplace_back(fmt::format("b{}", i), std::move(s));
    }
    return b;
  };
  std::size_t mismatches = 0, checked = 0;
  double worst_gap = 0.0;
  for (std::size_t n = 1; n <= 5; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto batches = random_batches(n, 10);
      std::vector<std::size_t> counts;
      for (std::size_t k = 1; k <= n; ++k) counts.push_back(k);
      const auto curve = dedup::ComputeUniquenessCurve(batches, counts, {});
      for (std::size_t k = 1; k <= n; ++k) {
        // Mean over every k-subset of distinct / total sentences.
        double sum = 0.0;
        std::size_t subsets = 0;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
          if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
          std::set<std::string> distinct;
          std::size_t total = 0;
          for (std::size_t b = 0; b < n; ++b) {
            if (!(mask >> b & 1)) continue;
            distinct.insert(batches[b].second.begin(), batches[b].second.end());
            total += batches[b].second.size();
          }
          sum += static_cast<double>(distinct.size()) / static_cast<double>(total);
          ++subsets;
        }
        ++checked;
        const double gap = std::abs(curve.points[k - 1].mean_unique_rate - sum / static_cast<double>(subsets));
        worst_gap = std::max(worst_gap, gap);
        if (gap > kCurveTol) ++mismatches;
      }
    }
  }
  const auto collide = random_batches(40, 50);
  const auto curve = dedup::ComputeUniquenessCurve(collide, {1, 2, 4, 8, 16, 32, 40}, {.subsamples = 1000, .seed = 4});
  bool non_increasing = true;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    if (curve.points[i].mean_unique_rate > curve.points[i - 1].mean_unique_rate) non_increasing = false;
  }
  return {mismatches == 0 && non_increasing,
          fmt::format("{} of {} exhaustive points differ (worst {:.1e}), collision curve {:.4f} -> {:.4f} non-increasing {}",
                      mismatches, checked, worst_gap, curve.points.front().mean_unique_rate,
                      curve.points.back().mean_unique_rate, non_increasing)};
}

// ---- pipeline ------------------------------------------------------------------

// Silences stdout while the CLI stages print their summaries.
class MuteStdout {
 public:
  MuteStdout() {
    std::fflush(stdout);
    saved_ = ::dup(1);
    const int null = ::open("/dev/null", O_WRONLY);
    ::dup2(null, 1);
    ::close(null);
  }
  ~MuteStdout() {
    std::fflush(stdout);
    ::dup2(saved_, 1);
    ::close(saved_);
  }

 private:
  int saved_;
};

Outcome Determinism() {
  testing::StubServer stub;
  testing::InstallStubModels(stub.server());
  stub.Start();
  TempDir dir("acc_pipe");
  const auto inputs = testing::WritePipelineInputs(dir.path() / "inputs", stub.url());
  std::vector<testing::StageResult> a, b;
  {
    MuteStdout mute;
    a = testing::RunPipeline(inputs, dir.path() / "a");
    b = testing::RunPipeline(inputs, dir.path() / "b");
  }
  for (const auto* run : {&a, &b}) {
    if (run->back().exit_code != 0) {
      return {false, fmt::format("stage {} exited {}", run->back().stage, run->back().exit_code)};
    }
  }
  const auto fa = testing::ArtifactBytes(dir.path() / "a");
  const auto fb = testing::ArtifactBytes(dir.path() / "b");
  std::size_t differing = 0;
  for (const auto& [name, bytes] : fa) {
    const auto it = fb.find(name);
    if (it == fb.end() || it->second != bytes) ++differing;
  }
  const bool ok = fa.size() == fb.size() && differing == 0 && a.size() == 16;
  return {ok, fmt::format("{} stages, {} artifacts, {} differ", a.size(), fa.size(), differing)};
}

Outcome AdjudicationRoundTrip() {
  TempDir dir("acc_adj");
  const std::vector<std::string> refs{"ina kwana, yaya gida", "mun gode \"sosai\"", "sai anjima", "ruwa ya yi sanyi"};
  const std::vector<std::string> hyps{"ina kwana yaya gidan", "mun gode so sai", "sai an jima", "ruwa ya sanyi"};
  const auto inv = asr_eval::BuildErrorInventory(refs, hyps, {}, 0);
  asr_eval::ExportAdjudication(inv, "ha", dir / "table.csv");
  auto rows = csv::Parse(io::ReadFile(dir / "table.csv"));
  const std::vector<std::string> labels{"Transcription Error", "Alternative Spelling", "Model Error"};
  for (std::size_t i = 1; i < rows.size(); ++i) {
    rows[i][3] = labels[i % labels.size()];
    rows[i][4] = fmt::format("checked, row {}\nsecond line", i);
  }
  std::ostringstream filled;
  for (const auto& r : rows) csv::WriteRow(filled, r);
  const auto back = asr_eval::ImportAdjudication(filled.str());
  const auto original = asr_eval::AdjudicationRows(inv, "ha");
  std::size_t bad = back.size() == original.size() ? 0 : 1;
  for (std::size_t i = 0; bad == 0 && i < back.size(); ++i) {
    if (back[i].language != original[i].language ||
        back[i].evaluation_transcript != original[i].evaluation_transcript ||
        back[i].model_output != original[i].model_output || back[i].assessment != labels[(i + 1) % labels.size()] ||
        back[i].comments != fmt::format("checked, row {}\nsecond line", i + 1)) {
      ++bad;
    }
  }
  return {bad == 0 && !original.empty(), fmt::format("{} rows exported, {} rows re-imported, {} mismatched",
                                                     original.size(), back.size(), bad)};
}

}  // namespace
}  // namespace synthcorpus::acceptance

int main() {
  using namespace synthcorpus::acceptance;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"bootstrap uniqueness identity", BootstrapUniqueness},
      {"WER/CER exhaustive oracle", EditDistanceOracle},
      {"degenerate bootstrap", DegenerateBootstrap},
      {"SNR and level fidelity", SnrAndLevelFidelity},
      {"augment distribution", AugmentDistribution},
      {"split exclusivity", SplitExclusivity},
      {"question rebalancing", QuestionRebalancing},
      {"hallucination filter", HallucinationFilter},
      {"ICC correctness", IccCorrectness},
      {"ANOVA correctness", AnovaCorrectness},
      {"rater bootstrap", RaterBootstrapNarrowing},
      {"uniqueness curve", UniquenessCurve},
      {"pipeline determinism", Determinism},
      {"adjudication round-trip", AdjudicationRoundTrip},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    fmt::print("{} {}: {}\n", o.pass ? "PASS" : "FAIL", name, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
