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

#include <set>

#include <gtest/gtest.h>

#include "corpus_fixtures.h"
#include "synthcorpus/error.h"

namespace synthcorpus::corpus {
namespace {

using testing::CheckSplit;
using testing::SplitFixture;

SplitSpec ThreeWay(std::uint64_t seed) {
  SplitSpec spec;
  spec.targets = {{"train", 0.1}, {"dev", 0.03}, {"test", 0.03}};
  spec.seed = seed;
  return spec;
}

std::map<std::string, double> Targets(const SplitSpec& spec) {
  return {spec.targets.begin(), spec.targets.end()};
}

TEST(SplitTest, RandomizedFixturesPassIndependentChecker) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Manifest m = SplitFixture(seed);
    const SplitSpec spec = ThreeWay(seed);
    const SplitResult r = Split(m, spec);
    const auto check = CheckSplit(m, r.splits, r.unassigned, Targets(spec));
    EXPECT_TRUE(check.ok(spec.tolerance))
        << "seed " << seed << " worst error " << check.worst_relative_error << " "
        << (check.problems.empty() ? "" : check.problems.front());
    EXPECT_LT(r.groups, m.utterances.size());
  }
}

TEST(SplitTest, CheckerDetectsPlantedLeak) {
  const Manifest m = SplitFixture(3);
  const SplitSpec spec = ThreeWay(3);
  SplitResult r = Split(m, spec);
  // Move one training utterance into dev and give it a test speaker.
  Utterance leaked = r.splits[0].second.utterances.back();
  r.splits[0].second.utterances.pop_back();
  leaked.speaker_id = r.splits[2].second.utterances.front().speaker_id;
  r.splits[1].second.utterances.push_back(leaked);
  const auto check = CheckSplit(m, r.splits, r.unassigned, Targets(spec));
  EXPECT_GE(check.speaker_overlaps, 1u);
}

TEST(SplitTest, SameSeedSameSplit) {
  const Manifest m = SplitFixture(5);
  const SplitResult a = Split(m, ThreeWay(9));
  const SplitResult b = Split(m, ThreeWay(9));
  for (std::size_t s = 0; s < a.splits.size(); ++s) {
    EXPECT_EQ(a.splits[s].second.utterances, b.splits[s].second.utterances);
  }
}

TEST(SplitTest, InsufficientCorpusReportsDeficit) {
  const Manifest m = SplitFixture(2, 20);
  SplitSpec spec;
  spec.targets = {{"train", 1.0}};
  try {
    Split(m, spec);
    FAIL();
  } catch (const InsufficientData& e) {
    EXPECT_NEAR(e.deficit(), 1.0 - m.total_hours(), 1e-9);
  }
}

TEST(SplitTest, OversizedGroupIsReported) {
  Manifest m;
  for (int i = 0; i < 10; ++i) {
    Utterance u;
    u.id = fmt::format("u{}", i);
    u.transcript = fmt::format("t{}", i);
    u.speaker_id = "same";
    u.duration = 60.0;
    m.utterances.push_back(u);
  }
  SplitSpec spec;
  spec.targets = {{"a", 0.05}, {"b", 0.05}};
  try {
    Split(m, spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnsplittableGroup);
    EXPECT_NE(std::string(e.what()).find("same"), std::string::npos);
  }
}

TEST(SplitTest, ValidateRejectsBadTargets) {
  SplitSpec spec;
  spec.targets = {{"a", 1.0}, {"a", -1.0}};
  EXPECT_THROW(spec.Validate(), ValidationError);
}

TEST(MixTest, ConstantTotalAndAdditive) {
  Manifest real = SplitFixture(7, 150);
  Manifest synth = SplitFixture(8, 150);
  for (auto& u : synth.utterances) {
    u.origin = Origin::kSynthetic;
    u.id = "syn-" + u.id;
  }
  MixSpec spec;
  spec.real_hours = 0.05;
  spec.synthetic_hours = 0.05;
  spec.seed = 4;
  const auto [mixed, report] = Mix(real, synth, spec);
  EXPECT_GE(report.real_hours, 0.05);
  EXPECT_LT(report.real_hours, 0.05 + 6.0 / 3600.0);
  EXPECT_EQ(mixed.utterances.size(), report.real_count + report.synthetic_count);

  // Raising only the synthetic share leaves the real selection unchanged.
  spec.synthetic_hours = 0.1;
  const auto [mixed2, report2] = Mix(real, synth, spec);
  EXPECT_EQ(report2.real_count, report.real_count);
  std::set<std::string> real_ids_a, real_ids_b;
  for (const auto& u : mixed.utterances) {
    if (u.origin == Origin::kReal) real_ids_a.insert(u.id);
  }
  for (const auto& u : mixed2.utterances) {
    if (u.origin == Origin::kReal) real_ids_b.insert(u.id);
  }
  EXPECT_EQ(real_ids_a, real_ids_b);

  spec.synthetic_hours = 100.0;
  EXPECT_THROW(Mix(real, synth, spec), InsufficientData);
}

TEST(ManifestTest, JsonlRoundTripAndLineErrors) {
  Manifest m = SplitFixture(1, 5);
  m.utterances[1].hypothesis = "hyp";
  m.provenance = {{"source", "fixture"}};
  const Manifest back = ManifestFromJsonl(ToJsonl(m));
  EXPECT_EQ(back.utterances, m.utterances);
  EXPECT_EQ(back.provenance, m.provenance);
  try {
    ManifestFromJsonl(R"({"id":"a","transcript":"","duration":1})");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.fields(), std::vector<std::string>{"line 1: transcript"});
  }
  EXPECT_EQ(ToMicros(1.5), 1500000);
  EXPECT_EQ(HoursToMicros(1.0), 3600000000LL);
}

TEST(ManifestTest, ImportCsv) {
  const std::string data =
      "path,transcript,speaker,gender,duration\n"
      "a.wav,\"Sannu, yaya?\",s1,F,2.5\n"
      "b.wav,Na gode,s2,male,1.0\n";
  const Manifest m = ImportCsv(data, "fleurs");
  ASSERT_EQ(m.utterances.size(), 2u);
  EXPECT_EQ(m.utterances[0].transcript, "Sannu, yaya?");
  EXPECT_EQ(m.utterances[0].gender, Gender::kFemale);
  EXPECT_EQ(m.utterances[1].id, "fleurs:b.wav");
  EXPECT_THROW(ImportCsv("path,transcript,speaker,gender,duration\na,b,c,d,x\n", "t"), ValidationError);
  EXPECT_THROW(ImportCsv("path,text\n", "t"), ValidationError);
}

TEST(DisaggregateTest, BucketsByGender) {
  const Manifest m = SplitFixture(4, 30);
  const auto buckets = Disaggregate(m);
  std::size_t total = 0;
  for (const auto& [g, b] : buckets) {
    total += b.utterances.size();
    for (const auto& u : b.utterances) EXPECT_EQ(GenderName(u.gender), g);
  }
  EXPECT_EQ(total, 30u);
}

}  // namespace
}  // namespace synthcorpus::corpus
