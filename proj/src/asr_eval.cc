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

#include "synthcorpus/asr_eval.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "synthcorpus/csv.h"
#include "synthcorpus/error.h"
#include "synthcorpus/io.h"
#include "synthcorpus/rng.h"
#include "synthcorpus/text.h"

namespace synthcorpus::asr_eval {

using nlohmann::json;

namespace {

bool IsApostropheVariant(char32_t c) {
  return c == U'’' || c == U'‘' || c == U'ʼ' || c == U'`' || c == U'´';
}

bool IsLetterish(char32_t c) {
  return !text::IsSpace(c) && c != U'\'' && !(c < 0x80 && std::ispunct(static_cast<int>(c)));
}

// Welford running mean and sample variance.
struct Running {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void Add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double Std() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0; }
};

}  // namespace

std::string Normalizer::DefaultPunctuation() {
  return ".,!?;:\"()[]{}“”„«»¿¡؟،؛…—–";
}

std::map<std::string, std::string> Normalizer::DefaultDiacriticMap() {
  return {{"ɗ", "d"},  {"ƙ", "k"},  {"ɓ", "b"}, {"ƴ", "y"},
          {"ŋ", "ng"}, {"ng'", "ng"},    {"ɛ", "e"}, {"ɔ", "o"},
          {"à", "a"},  {"á", "a"},  {"â", "a"}, {"è", "e"},
          {"é", "e"},  {"ê", "e"},  {"ì", "i"}, {"í", "i"},
          {"î", "i"},  {"ò", "o"},  {"ó", "o"}, {"ô", "o"},
          {"ù", "u"},  {"ú", "u"},  {"û", "u"}, {"\u0301", ""},
          {"\u0300", ""}, {"\u0302", ""}};
}

std::string Normalizer::Apply(std::string_view s) const {
  std::u32string cps = text::DecodeUtf8(s);
  if (lowercase) {
    for (auto& c : cps) c = text::FoldCase(c);
  }
  if (apostrophe_fold) {
    for (auto& c : cps) {
      if (IsApostropheVariant(c)) c = U'\'';
    }
  }
  if (!strip_punct.empty()) {
    const std::u32string strip = text::DecodeUtf8(strip_punct);
    std::u32string out;
    out.reserve(cps.size());
    for (char32_t c : cps) {
      if (strip.find(c) == std::u32string::npos) out.push_back(c);
    }
    cps = std::move(out);
  }
  if (diacritic_mode == DiacriticMode::kStripListed && !diacritic_map.empty()) {
    std::vector<std::pair<std::u32string, std::u32string>> rules;
    std::size_t longest = 0;
    for (const auto& [from, to] : diacritic_map) {
      rules.emplace_back(text::DecodeUtf8(from), text::DecodeUtf8(to));
      longest = std::max(longest, rules.back().first.size());
    }
    // Repeat until nothing changes: an output can complete a longer key
    // (ŋ' -> ng' -> ng).
    for (int pass = 0; pass < 8; ++pass) {
      std::u32string out;
      std::size_t i = 0;
      bool changed = false;
      while (i < cps.size()) {
        bool hit = false;
        for (std::size_t len = std::min(longest, cps.size() - i); len > 0 && !hit; --len) {
          for (const auto& [from, to] : rules) {
            if (from.size() == len && cps.compare(i, len, from) == 0) {
              out += to;
              i += len;
              hit = true;
              changed = true;
              break;
            }
          }
        }
        if (!hit) out.push_back(cps[i++]);
      }
      cps = std::move(out);
      if (!changed) break;
    }
  }
  if (split_contractions) {
    for (std::size_t i = 1; i + 1 < cps.size(); ++i) {
      if (cps[i] == U'\'' && IsLetterish(cps[i - 1]) && IsLetterish(cps[i + 1])) cps[i] = U' ';
    }
  }
  return text::CollapseWhitespace(text::EncodeUtf8(cps));
}

std::string Normalizer::Id() const {
  const std::string blob = ToJson(*this).dump();
  return fmt::format("norm-{:016x}", HashLabel(blob));
}

json ToJson(const Normalizer& n) {
  return {{"lowercase", n.lowercase},
          {"strip_punct", n.strip_punct},
          {"apostrophe_fold", n.apostrophe_fold},
          {"split_contractions", n.split_contractions},
          {"diacritic_mode",
           n.diacritic_mode == Normalizer::DiacriticMode::kKeep ? "keep" : "strip_listed"},
          {"diacritic_map", n.diacritic_map}};
}

Normalizer NormalizerFromJson(const json& j) {
  Normalizer n;
  if (!j.is_object()) Throw(ErrorKind::kConfig, "normalizer must be an object");
  n.lowercase = j.value("lowercase", n.lowercase);
  n.strip_punct = j.value("strip_punct", n.strip_punct);
  n.apostrophe_fold = j.value("apostrophe_fold", n.apostrophe_fold);
  n.split_contractions = j.value("split_contractions", n.split_contractions);
  const std::string mode = j.value("diacritic_mode", std::string("keep"));
  if (mode == "keep") {
    n.diacritic_mode = Normalizer::DiacriticMode::kKeep;
  } else if (mode == "strip_listed") {
    n.diacritic_mode = Normalizer::DiacriticMode::kStripListed;
  } else {
    throw ValidationError({"diacritic_mode"});
  }
  if (j.contains("diacritic_map")) {
    n.diacritic_map = j.at("diacritic_map").get<std::map<std::string, std::string>>();
  }
  return n;
}

char EditOpCode(EditOp op) {
  switch (op) {
    case EditOp::kMatch: return 'M';
    case EditOp::kSub: return 'S';
    case EditOp::kDel: return 'D';
    case EditOp::kIns: return 'I';
  }
  return '?';
}

template <typename T>
Alignment EditAlign(std::span<const T> ref, std::span<const T> hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  const std::size_t w = m + 1;
  std::vector<std::size_t> d((n + 1) * w);
  for (std::size_t i = 0; i <= n; ++i) d[i * w] = i;
  for (std::size_t j = 0; j <= m; ++j) d[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = d[(i - 1) * w + j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i * w + j] = std::min({diag, d[(i - 1) * w + j] + 1, d[i * w + j - 1] + 1});
    }
  }
  Alignment a;
  a.distance = d[n * w + m];
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    const std::size_t cur = d[i * w + j];
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && cur == d[(i - 1) * w + j - 1]) {
      a.ops.push_back(EditOp::kMatch);
      --i;
      --j;
    } else if (i > 0 && j > 0 && cur == d[(i - 1) * w + j - 1] + 1) {
      a.ops.push_back(EditOp::kSub);
      --i;
      --j;
    } else if (i > 0 && cur == d[(i - 1) * w + j] + 1) {
      a.ops.push_back(EditOp::kDel);
      --i;
    } else {
      a.ops.push_back(EditOp::kIns);
      --j;
    }
  }
  std::reverse(a.ops.begin(), a.ops.end());
  return a;
}

template Alignment EditAlign<std::string>(std::span<const std::string>,
                                          std::span<const std::string>);
template Alignment EditAlign<char32_t>(std::span<const char32_t>, std::span<const char32_t>);
template Alignment EditAlign<int>(std::span<const int>, std::span<const int>);

std::vector<std::string> WordTokens(std::string_view normalized) {
  return text::SplitWords(normalized);
}

std::u32string CharTokens(std::string_view normalized, bool include_spaces) {
  std::u32string cps = text::DecodeUtf8(normalized);
  if (include_spaces) return cps;
  std::u32string out;
  out.reserve(cps.size());
  for (char32_t c : cps) {
    if (!text::IsSpace(c)) out.push_back(c);
  }
  return out;
}

namespace {

void CheckPaired(const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
  if (refs.size() != hyps.size()) {
    Throw(ErrorKind::kInvalidInput, fmt::format("{} references but {} hypotheses",
                                                refs.size(), hyps.size()));
  }
  if (refs.empty()) Throw(ErrorKind::kInvalidInput, "no items to score");
}

ItemErrors ScoreOne(const std::string& ref, const std::string& hyp, const ScoreOptions& o) {
  const std::string r = o.normalizer.Apply(ref);
  const std::string h = o.normalizer.Apply(hyp);
  ItemErrors e;
  const auto rw = WordTokens(r);
  const auto hw = WordTokens(h);
  e.word_ref = rw.size();
  e.word_errors = EditAlign<std::string>(rw, hw).distance;
  const auto rc = CharTokens(r, o.cer_include_spaces);
  const auto hc = CharTokens(h, o.cer_include_spaces);
  e.char_ref = rc.size();
  e.char_errors =
      EditAlign<char32_t>(std::span<const char32_t>(rc.data(), rc.size()),
                          std::span<const char32_t>(hc.data(), hc.size()))
          .distance;
  return e;
}

struct Pooled {
  double wer = 0.0;
  double cer = 0.0;
};

Pooled Pool(std::span<const ItemErrors> items) {
  std::size_t we = 0, wr = 0, ce = 0, cr = 0;
  for (const auto& e : items) {
    we += e.word_errors;
    wr += e.word_ref;
    ce += e.char_errors;
    cr += e.char_ref;
  }
  if (wr == 0 || cr == 0) Throw(ErrorKind::kEmptyReference, "references contain no tokens");
  return {static_cast<double>(we) / static_cast<double>(wr),
          static_cast<double>(ce) / static_cast<double>(cr)};
}

}  // namespace

std::vector<ItemErrors> ScoreItems(const std::vector<std::string>& refs,
                                   const std::vector<std::string>& hyps,
                                   const ScoreOptions& options) {
  CheckPaired(refs, hyps);
  std::vector<ItemErrors> out(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) out[i] = ScoreOne(refs[i], hyps[i], options);
  return out;
}

double Wer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps,
           const Normalizer& normalizer) {
  ScoreOptions o;
  o.normalizer = normalizer;
  const auto items = ScoreItems(refs, hyps, o);
  std::size_t e = 0, r = 0;
  for (const auto& it : items) {
    e += it.word_errors;
    r += it.word_ref;
  }
  if (r == 0) Throw(ErrorKind::kEmptyReference, "references contain no words");
  return static_cast<double>(e) / static_cast<double>(r);
}

double Cer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps,
           const Normalizer& normalizer, bool include_spaces) {
  ScoreOptions o;
  o.normalizer = normalizer;
  o.cer_include_spaces = include_spaces;
  const auto items = ScoreItems(refs, hyps, o);
  std::size_t e = 0, r = 0;
  for (const auto& it : items) {
    e += it.char_errors;
    r += it.char_ref;
  }
  if (r == 0) Throw(ErrorKind::kEmptyReference, "references contain no characters");
  return static_cast<double>(e) / static_cast<double>(r);
}

BootstrapStats Bootstrap(std::span<const ItemErrors> items, const BootstrapOptions& options) {
  if (items.empty()) Throw(ErrorKind::kInvalidInput, "bootstrap over zero items");
  if (options.iterations == 0) throw ValidationError({"iterations"});
  const std::size_t n = items.size();
  const std::size_t iters = options.iterations;
  std::vector<double> wers(iters, NAN), cers(iters, NAN), uniq(iters, 0.0);

  auto run = [&](std::size_t it) {
    Rng rng = MakeRng(DeriveSeed(options.seed, static_cast<std::uint64_t>(it)));
    std::size_t we = 0, wr = 0, ce = 0, cr = 0;
    std::vector<bool> seen(n, false);
    std::size_t distinct = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t idx = UniformIndex(rng, n);
      if (!seen[idx]) {
        seen[idx] = true;
        ++distinct;
      }
      const ItemErrors& e = items[idx];
      we += e.word_errors;
      wr += e.word_ref;
      ce += e.char_errors;
      cr += e.char_ref;
    }
    if (wr > 0) wers[it] = static_cast<double>(we) / static_cast<double>(wr);
    if (cr > 0) cers[it] = static_cast<double>(ce) / static_cast<double>(cr);
    uniq[it] = static_cast<double>(distinct) / static_cast<double>(n);
  };

  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), iters));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t it = w; it < iters; it += workers) run(it);
    });
  }
  for (auto& t : pool) t.join();

  // Reduce in iteration order so the result does not depend on threading.
  Running rw, rc, ru;
  for (std::size_t it = 0; it < iters; ++it) {
    if (!std::isnan(wers[it])) rw.Add(wers[it]);
    if (!std::isnan(cers[it])) rc.Add(cers[it]);
    ru.Add(uniq[it]);
  }
  if (rw.n == 0 || rc.n == 0) {
    Throw(ErrorKind::kEmptyReference, "every resample had empty references");
  }
  BootstrapStats s;
  s.iterations = iters;
  s.wer_mean = rw.mean;
  s.wer_std = rw.Std();
  s.cer_mean = rc.mean;
  s.cer_std = rc.Std();
  s.mean_unique_fraction = ru.mean;
  return s;
}

namespace {

json ToJson(const BootstrapStats& b) {
  return {{"iterations", b.iterations},   {"wer_mean", b.wer_mean},
          {"wer_std", b.wer_std},         {"cer_mean", b.cer_mean},
          {"cer_std", b.cer_std},         {"mean_unique_fraction", b.mean_unique_fraction}};
}

}  // namespace

json ToJson(const EvalReport& r) {
  json j{{"n_items", r.n_items},
         {"wer", r.wer},
         {"cer", r.cer},
         {"bootstrap", ToJson(r.bootstrap)},
         {"normalizer_id", r.normalizer_id},
         {"warnings", r.warnings}};
  if (!r.per_group.empty()) {
    json g = json::object();
    for (const auto& [name, gr] : r.per_group) {
      g[name] = {{"n_items", gr.n_items},
                 {"wer", gr.wer},
                 {"cer", gr.cer},
                 {"bootstrap", ToJson(gr.bootstrap)}};
    }
    j["per_group"] = std::move(g);
  }
  return j;
}

EvalReport BootstrapEval(const std::vector<std::string>& refs,
                         const std::vector<std::string>& hyps, const ScoreOptions& score,
                         const BootstrapOptions& boot) {
  const auto items = ScoreItems(refs, hyps, score);
  EvalReport r;
  r.n_items = items.size();
  const Pooled p = Pool(items);
  r.wer = p.wer;
  r.cer = p.cer;
  r.bootstrap = Bootstrap(items, boot);
  r.normalizer_id = score.normalizer.Id();
  return r;
}

EvalReport EvalByGroup(const std::vector<std::string>& refs,
                       const std::vector<std::string>& hyps,
                       const std::vector<std::string>& groups, const ScoreOptions& score,
                       const BootstrapOptions& boot,
                       const std::vector<std::string>& expected_groups) {
  if (groups.size() != refs.size()) {
    Throw(ErrorKind::kInvalidInput,
          fmt::format("{} group labels for {} items", groups.size(), refs.size()));
  }
  EvalReport r = BootstrapEval(refs, hyps, score, boot);
  const auto items = ScoreItems(refs, hyps, score);
  std::map<std::string, std::vector<ItemErrors>> by_group;
  for (std::size_t i = 0; i < items.size(); ++i) by_group[groups[i]].push_back(items[i]);
  for (const auto& name : expected_groups) {
    if (!by_group.contains(name)) {
      const std::string msg = fmt::format("group '{}' has no items; omitted", name);
      spdlog::warn("eval: {}", msg);
      r.warnings.push_back(msg);
    }
  }
  for (const auto& [name, members] : by_group) {
    GroupReport g;
    g.n_items = members.size();
    try {
      const Pooled p = Pool(members);
      g.wer = p.wer;
      g.cer = p.cer;
      BootstrapOptions gb = boot;
      gb.seed = DeriveSeed(boot.seed, name);
      g.bootstrap = Bootstrap(members, gb);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kEmptyReference) throw;
      const std::string msg = fmt::format("group '{}' has empty references; omitted", name);
      spdlog::warn("eval: {}", msg);
      r.warnings.push_back(msg);
      continue;
    }
    if (g.n_items < 10) {
      const std::string msg =
          fmt::format("group '{}' has only {} items; estimate is unreliable", name, g.n_items);
      spdlog::warn("eval: {}", msg);
      r.warnings.push_back(msg);
    }
    r.per_group.emplace(name, std::move(g));
  }
  return r;
}

std::vector<WordAlignment> AlignCorpus(const std::vector<std::string>& refs,
                                       const std::vector<std::string>& hyps,
                                       const Normalizer& normalizer) {
  CheckPaired(refs, hyps);
  std::vector<WordAlignment> out(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    out[i].ref = WordTokens(normalizer.Apply(refs[i]));
    out[i].hyp = WordTokens(normalizer.Apply(hyps[i]));
    out[i].alignment = EditAlign<std::string>(out[i].ref, out[i].hyp);
  }
  return out;
}

ErrorInventory BuildErrorInventory(const std::vector<std::string>& refs,
                                   const std::vector<std::string>& hyps,
                                   const Normalizer& normalizer, std::size_t top_k) {
  const auto aligned = AlignCorpus(refs, hyps, normalizer);
  struct Acc {
    std::size_t occurrences = 0;
    std::size_t correct = 0;
    std::vector<std::size_t> failed_items;
  };
  std::map<std::string, Acc> acc;
  for (std::size_t item = 0; item < aligned.size(); ++item) {
    const auto& a = aligned[item];
    std::size_t ri = 0;
    for (EditOp op : a.alignment.ops) {
      if (op == EditOp::kIns) continue;
      Acc& w = acc[a.ref[ri]];
      ++w.occurrences;
      if (op == EditOp::kMatch) {
        ++w.correct;
      } else if (w.failed_items.empty() || w.failed_items.back() != item) {
        w.failed_items.push_back(item);
      }
      ++ri;
    }
  }
  ErrorInventory inv;
  for (auto& [word, w] : acc) {
    if (w.correct == w.occurrences) continue;
    InventoryRow row;
    row.word = word;
    row.occurrences = w.occurrences;
    row.times_correct = w.correct;
    row.always_failed = w.correct == 0;
    for (std::size_t k = 0; k < w.failed_items.size() && k < 3; ++k) {
      row.samples.push_back({refs[w.failed_items[k]], hyps[w.failed_items[k]]});
    }
    inv.rows.push_back(std::move(row));
  }
  std::stable_sort(inv.rows.begin(), inv.rows.end(),
                   [](const InventoryRow& a, const InventoryRow& b) {
                     if (a.always_failed != b.always_failed) return a.always_failed;
                     if (a.occurrences != b.occurrences) return a.occurrences > b.occurrences;
                     return a.word < b.word;
                   });
  if (top_k > 0 && inv.rows.size() > top_k) inv.rows.resize(top_k);
  return inv;
}

json ToJson(const ErrorInventory& inv) {
  json rows = json::array();
  for (const auto& r : inv.rows) {
    json samples = json::array();
    for (const auto& s : r.samples) {
      samples.push_back({{"reference", s.reference}, {"hypothesis", s.hypothesis}});
    }
    rows.push_back({{"word", r.word},
                    {"occurrences", r.occurrences},
                    {"times_correct", r.times_correct},
                    {"always_failed", r.always_failed},
                    {"samples", std::move(samples)}});
  }
  return {{"rows", std::move(rows)}};
}

std::vector<AdjudicationRow> AdjudicationRows(const ErrorInventory& inv,
                                              std::string_view language) {
  std::vector<AdjudicationRow> out;
  for (const auto& r : inv.rows) {
    AdjudicationRow a;
    a.language = std::string(language);
    if (!r.samples.empty()) {
      a.evaluation_transcript = r.samples.front().reference;
      a.model_output = r.samples.front().hypothesis;
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::string AdjudicationCsv(const std::vector<AdjudicationRow>& rows) {
  std::ostringstream os;
  os << kAdjudicationHeader << '\n';
  for (const auto& r : rows) {
    csv::WriteRow(os, {r.language, r.evaluation_transcript, r.model_output, r.assessment,
                       r.comments});
  }
  return os.str();
}

void ExportAdjudication(const ErrorInventory& inv, std::string_view language,
                        const std::string& path) {
  io::WriteFile(path, AdjudicationCsv(AdjudicationRows(inv, language)));
}

std::vector<AdjudicationRow> ImportAdjudication(std::string_view data) {
  const csv::Table t = csv::Table::FromString(data);
  const std::size_t c_lang = t.RequireColumn("language");
  const std::size_t c_ref = t.RequireColumn("evaluation_transcript");
  const std::size_t c_hyp = t.RequireColumn("model_output");
  const std::size_t c_assess = t.RequireColumn("assessment");
  const std::size_t c_comments = t.RequireColumn("comments");
  std::vector<AdjudicationRow> out;
  for (const auto& row : t.rows()) {
    auto cell = [&](std::size_t c) { return c < row.size() ? row[c] : std::string(); };
    out.push_back({cell(c_lang), cell(c_ref), cell(c_hyp), cell(c_assess), cell(c_comments)});
  }
  return out;
}

}  // namespace synthcorpus::asr_eval
