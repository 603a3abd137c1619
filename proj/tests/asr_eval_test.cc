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

#include <chrono>
#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "synthcorpus/csv.h"
#include "synthcorpus/error.h"
#include "synthcorpus/io.h"
#include "test_support.h"

namespace synthcorpus::asr_eval {
namespace {

// Shortest edit path found by breadth-first search over token sequences,
// applying single insertions, deletions and substitutions. Lengths are
// capped at max(|a|, |b|): some shortest path (deletions, then
// substitutions, then insertions) never exceeds that.
int BfsDistance(const std::vector<int>& a, const std::vector<int>& b, int alphabet) {
  const std::size_t cap = std::max(a.size(), b.size());
  std::map<std::vector<int>, int> dist{{a, 0}};
  std::deque<std::vector<int>> queue{a};
  while (!queue.empty()) {
    auto cur = queue.front();
    queue.pop_front();
    const int d = dist[cur];
    if (cur == b) return d;
    std::vector<std::vector<int>> next;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      auto del = cur;
      del.erase(del.begin() + static_cast<long>(i));
      next.push_back(del);
      for (int s = 0; s < alphabet; ++s) {
        if (s == cur[i]) continue;
        auto sub = cur;
        sub[i] = s;
        next.push_back(sub);
      }
    }
    if (cur.size() < cap) {
      for (std::size_t i = 0; i <= cur.size(); ++i) {
        for (int s = 0; s < alphabet; ++s) {
          auto ins = cur;
          ins.insert(ins.begin() + static_cast<long>(i), s);
          next.push_back(ins);
        }
      }
    }
    for (auto& n : next) {
      if (dist.emplace(n, d + 1).second) queue.push_back(std::move(n));
    }
  }
  return -1;
}

// Replays an alignment against ref and checks it produces hyp.
bool ReplayMatches(const std::vector<int>& ref, const std::vector<int>& hyp, const Alignment& a) {
  std::size_t i = 0, j = 0, edits = 0;
  for (EditOp op : a.ops) {
    switch (op) {
      case EditOp::kMatch:
        if (i >= ref.size() || j >= hyp.size() || ref[i] != hyp[j]) return false;
        ++i, ++j;
        break;
      case EditOp::kSub:
        if (i >= ref.size() || j >= hyp.size() || ref[i] == hyp[j]) return false;
        ++i, ++j, ++edits;
        break;
      case EditOp::kDel:
        if (i >= ref.size()) return false;
        ++i, ++edits;
        break;
      case EditOp::kIns:
        if (j >= hyp.size()) return false;
        ++j, ++edits;
        break;
    }
  }
  return i == ref.size() && j == hyp.size() && edits == a.distance;
}

TEST(EditAlignTest, MatchesBreadthFirstOracle) {
  std::mt19937 gen(20240611);
  std::uniform_int_distribution<int> len(0, 6), sym(0, 2);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> a(static_cast<std::size_t>(len(gen))), b(static_cast<std::size_t>(len(gen)));
    for (auto& x : a) x = sym(gen);
    for (auto& x : b) x = sym(gen);
    const Alignment al = EditAlign<int>(a, b);
    ASSERT_EQ(static_cast<int>(al.distance), BfsDistance(a, b, 3)) << "trial " << trial;
    ASSERT_TRUE(ReplayMatches(a, b, al)) << "trial " << trial;
  }
}

TEST(EditAlignTest, TieBreakPrefersMatchThenSubThenDel) {
  const std::vector<std::string> ref{"a", "b"};
  const std::vector<std::string> hyp{"b"};
  const Alignment al = EditAlign<std::string>(ref, hyp);
  ASSERT_EQ(al.distance, 1u);
  ASSERT_EQ(al.ops.size(), 2u);
  EXPECT_EQ(al.ops[0], EditOp::kDel);
  EXPECT_EQ(al.ops[1], EditOp::kMatch);

  const std::vector<std::string> r2{"x"};
  const std::vector<std::string> h2{"y", "z"};
  const Alignment a2 = EditAlign<std::string>(r2, h2);
  EXPECT_EQ(a2.distance, 2u);
  EXPECT_EQ(std::string({EditOpCode(a2.ops[0]), EditOpCode(a2.ops[1])}), "IS");
}

TEST(EditAlignTest, EmptySequences) {
  const std::vector<int> empty, three{1, 2, 3};
  EXPECT_EQ(EditAlign<int>(empty, empty).distance, 0u);
  EXPECT_EQ(EditAlign<int>(three, empty).distance, 3u);
  EXPECT_EQ(EditAlign<int>(empty, three).distance, 3u);
}

TEST(WerTest, PooledOverCorpus) {
  const std::vector<std::string> refs{"the cat sat", "on the mat"};
  const std::vector<std::string> hyps{"the cat sit", "on mat"};
  // 1 substitution + 1 deletion over 6 reference words.
  EXPECT_DOUBLE_EQ(Wer(refs, hyps), 2.0 / 6.0);
}

TEST(WerTest, IdenticalIsZero) {
  const std::vector<std::string> refs{"Sannu da zuwa", "Ina kwana?"};
  EXPECT_EQ(Wer(refs, refs), 0.0);
  EXPECT_EQ(Cer(refs, refs), 0.0);
}

TEST(WerTest, EmptyReferenceThrows) {
  try {
    Wer({"", "  "}, {"a", "b"});
    FAIL() << "expected EmptyReference";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyReference);
  }
}

TEST(WerTest, LengthMismatchIsInvalidInput) {
  try {
    Wer({"a"}, {"a", "b"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidInput);
  }
}

TEST(CerTest, SpacesExcludedByDefault) {
  // "ab cd" vs "abcd": only the space differs.
  EXPECT_EQ(Cer({"ab cd"}, {"abcd"}), 0.0);
  EXPECT_DOUBLE_EQ(Cer({"ab cd"}, {"abcd"}, Normalizer{}, /*include_spaces=*/true), 1.0 / 5.0);
  EXPECT_DOUBLE_EQ(Cer({"abcd"}, {"abce"}), 0.25);
}

TEST(NormalizerTest, DefaultsCasefoldAndStripPunctuation) {
  const Normalizer n;
  EXPECT_EQ(n.Apply("  Ina   KWANA? "), "ina kwana");
  EXPECT_EQ(n.Apply("«Ɗan» ƙasa, ne."), "ɗan ƙasa ne");
}

TEST(NormalizerTest, ApostropheFoldAndContractions) {
  Normalizer n;
  EXPECT_EQ(n.Apply("ba’a"), "ba'a");
  EXPECT_EQ(n.Apply("baʼa"), "ba'a");
  n.split_contractions = true;
  EXPECT_EQ(n.Apply("za'a"), "za a");
  EXPECT_EQ(n.Apply("'a"), "'a");
}

TEST(NormalizerTest, ListedDiacritics) {
  Normalizer n;
  n.diacritic_mode = Normalizer::DiacriticMode::kStripListed;
  EXPECT_EQ(n.Apply("Ɗan ƙasa ɓera"), "dan kasa bera");
  EXPECT_EQ(n.Apply("ng’ombe"), "ngombe");
  EXPECT_EQ(n.Apply("ŋombe"), "ngombe");
  EXPECT_EQ(n.Apply("ŋ'ombe"), "ngombe");
  EXPECT_EQ(n.Apply("Boń"), "bon");
}

TEST(NormalizerTest, Idempotent) {
  const std::vector<std::string> alphabet{"a", "B", " ", "'", "’", "ʼ", "?", ",", "ɗ", "Ɗ", "ŋ",
                                          "n", "g", "é", "́", "«", "\t", "ƙ", "-"};
  std::mt19937 gen(7);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1), len(0, 12);
  for (int mode = 0; mode < 4; ++mode) {
    Normalizer n;
    n.split_contractions = mode & 1;
    n.diacritic_mode = (mode & 2) ? Normalizer::DiacriticMode::kStripListed
                                  : Normalizer::DiacriticMode::kKeep;
    for (int trial = 0; trial < 2000; ++trial) {
      std::string s;
      for (std::size_t k = len(gen); k > 0; --k) s += alphabet[pick(gen)];
      const std::string once = n.Apply(s);
      ASSERT_EQ(n.Apply(once), once) << "input: " << s << " mode " << mode;
    }
  }
}

TEST(NormalizerTest, JsonRoundTripKeepsId) {
  Normalizer n;
  n.split_contractions = true;
  n.diacritic_mode = Normalizer::DiacriticMode::kStripListed;
  const Normalizer back = NormalizerFromJson(ToJson(n));
  EXPECT_EQ(back.Id(), n.Id());
  EXPECT_NE(Normalizer{}.Id(), n.Id());
}

std::vector<ItemErrors> Items(std::size_t n, std::size_t errors, std::size_t ref) {
  return std::vector<ItemErrors>(n, ItemErrors{errors, ref, errors, ref});
}

TEST(BootstrapTest, UniqueFractionApproachesLimit) {
  const std::size_t m = 1000;
  const double oracle = 1.0 - std::pow(1.0 - 1.0 / m, static_cast<double>(m));
  std::vector<ItemErrors> items;
  for (std::size_t i = 0; i < m; ++i) items.push_back({i % 3, 5, i % 7, 20});
  const auto t0 = std::chrono::steady_clock::now();
  const auto stats = Bootstrap(items, {1000, 99});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_NEAR(stats.mean_unique_fraction, oracle, 0.01);
  EXPECT_LT(secs, 5.0);
}

TEST(BootstrapTest, IdenticalItemsHaveZeroSpread) {
  const auto items = Items(50, 1, 3);
  const auto stats = Bootstrap(items, {500, 5});
  EXPECT_EQ(stats.wer_std, 0.0);
  EXPECT_EQ(stats.cer_std, 0.0);
  EXPECT_EQ(stats.wer_mean, 1.0 / 3.0);
  EXPECT_EQ(stats.cer_mean, 1.0 / 3.0);
}

TEST(BootstrapTest, DegenerateCorpusMeanEqualsPointEstimate) {
  const std::vector<std::string> refs(40, "sannu da zuwa gida");
  const std::vector<std::string> hyps(40, "sannu zuwa gida");
  const auto r = BootstrapEval(refs, hyps, {}, {300, 11});
  EXPECT_EQ(r.bootstrap.wer_std, 0.0);
  EXPECT_EQ(r.bootstrap.wer_mean, r.wer);
  EXPECT_EQ(r.bootstrap.cer_mean, r.cer);
}

TEST(BootstrapTest, SameSeedSameReport) {
  std::vector<std::string> refs, hyps;
  for (int i = 0; i < 30; ++i) {
    refs.push_back("a b c d " + std::to_string(i));
    hyps.push_back(i % 4 == 0 ? "a b x d" : "a b c d " + std::to_string(i));
  }
  const auto a = ToJson(BootstrapEval(refs, hyps, {}, {200, 3})).dump();
  const auto b = ToJson(BootstrapEval(refs, hyps, {}, {200, 3})).dump();
  const auto c = ToJson(BootstrapEval(refs, hyps, {}, {200, 4})).dump();
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(EvalByGroupTest, MissingGroupOmittedWithWarning) {
  const std::vector<std::string> refs{"a b", "c d", "e f"};
  const std::vector<std::string> hyps{"a b", "c x", "e f"};
  const std::vector<std::string> groups{"female", "female", "female"};
  const auto r = EvalByGroup(refs, hyps, groups, {}, {100, 1}, {"male", "female"});
  EXPECT_EQ(r.per_group.size(), 1u);
  ASSERT_TRUE(r.per_group.contains("female"));
  EXPECT_DOUBLE_EQ(r.per_group.at("female").wer, 1.0 / 6.0);
  bool warned_male = false;
  for (const auto& w : r.warnings) warned_male |= w.find("'male'") != std::string::npos;
  EXPECT_TRUE(warned_male);
}

TEST(EvalByGroupTest, GroupsPartitionTheCorpus) {
  const std::vector<std::string> refs{"a b", "c d", "e f", "g h"};
  const std::vector<std::string> hyps{"a x", "c d", "e f", "y z"};
  const std::vector<std::string> groups{"male", "female", "male", "female"};
  const auto r = EvalByGroup(refs, hyps, groups, {}, {50, 1});
  EXPECT_DOUBLE_EQ(r.per_group.at("male").wer, 1.0 / 4.0);
  EXPECT_DOUBLE_EQ(r.per_group.at("female").wer, 2.0 / 4.0);
  EXPECT_DOUBLE_EQ(r.wer, 3.0 / 8.0);
}

TEST(ErrorInventoryTest, CountsMatchRecountFromAlignments) {
  const std::vector<std::string> refs{"ina kwana lafiya", "lafiya lau", "ina gida", "kwana biyu lafiya"};
  const std::vector<std::string> hyps{"ina kwana lafia", "lafia lau", "ina gida", "kwana biyu lafiya"};
  const Normalizer norm;
  const auto aligned = AlignCorpus(refs, hyps, norm);

  std::map<std::string, std::pair<std::size_t, std::size_t>> recount;  // word -> (occ, correct)
  for (const auto& a : aligned) {
    std::size_t i = 0;
    for (EditOp op : a.alignment.ops) {
      if (op == EditOp::kIns) continue;
      auto& [occ, ok] = recount[a.ref[i++]];
      ++occ;
      if (op == EditOp::kMatch) ++ok;
    }
  }
  const auto inv = BuildErrorInventory(refs, hyps, norm, 0);
  ASSERT_EQ(inv.rows.size(), 1u);
  EXPECT_EQ(inv.rows[0].word, "lafiya");
  EXPECT_EQ(inv.rows[0].occurrences, recount["lafiya"].first);
  EXPECT_EQ(inv.rows[0].times_correct, recount["lafiya"].second);
  EXPECT_FALSE(inv.rows[0].always_failed);
  EXPECT_EQ(inv.rows[0].samples.size(), 2u);
}

TEST(ErrorInventoryTest, AlwaysFailedRankedFirst) {
  const std::vector<std::string> refs{"a b c", "a b c", "a b d", "zz"};
  const std::vector<std::string> hyps{"x b c", "a b y", "a b y", "qq"};
  const auto inv = BuildErrorInventory(refs, hyps, {}, 0);
  ASSERT_GE(inv.rows.size(), 3u);
  EXPECT_TRUE(inv.rows[0].always_failed);
  EXPECT_TRUE(inv.rows[1].always_failed);
  std::set<std::string> first_two{inv.rows[0].word, inv.rows[1].word};
  EXPECT_EQ(first_two, (std::set<std::string>{"d", "zz"}));
  for (const auto& r : inv.rows) EXPECT_LE(r.samples.size(), 3u);
}

TEST(AdjudicationTest, SingleRowInventoryGivesOneDataRow) {
  const auto inv = BuildErrorInventory({"sannu da zuwa"}, {"sannu da zuwan"}, {}, 0);
  ASSERT_EQ(inv.rows.size(), 1u);
  const auto rows = csv::Parse(AdjudicationCsv(AdjudicationRows(inv, "ha")));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (csv::Row{"language", "evaluation_transcript", "model_output", "assessment", "comments"}));
  EXPECT_EQ(rows[1][0], "ha");
  EXPECT_EQ(rows[1][1], "sannu da zuwa");
  EXPECT_EQ(rows[1][2], "sannu da zuwan");
}

TEST(AdjudicationTest, FilledSheetRoundTrips) {
  testing::TempDir dir("adj");
  const std::vector<std::string> refs{"a, b c", "d \"e\" f", "g h"};
  const std::vector<std::string> hyps{"a b x", "d e y", "g q"};
  const auto inv = BuildErrorInventory(refs, hyps, {}, 0);
  ExportAdjudication(inv, "sw", dir / "adj.csv");

  auto table = csv::Parse(io::ReadFile(dir / "adj.csv"));
  for (std::size_t i = 1; i < table.size(); ++i) {
    table[i][3] = i % 2 ? "Transcription Error" : "Alternative Spelling";
    table[i][4] = "line\nbreak, comma";
  }
  std::ostringstream os;
  for (const auto& r : table) csv::WriteRow(os, r);
  const auto back = ImportAdjudication(os.str());
  const auto original = AdjudicationRows(inv, "sw");
  ASSERT_EQ(back.size(), original.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].language, original[i].language);
    EXPECT_EQ(back[i].evaluation_transcript, original[i].evaluation_transcript);
    EXPECT_EQ(back[i].model_output, original[i].model_output);
    EXPECT_FALSE(back[i].assessment.empty());
    EXPECT_EQ(back[i].comments, "line\nbreak, comma");
  }
}

}  // namespace
}  // namespace synthcorpus::asr_eval
