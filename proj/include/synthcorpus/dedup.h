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
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "synthcorpus/textgen.h"

namespace synthcorpus::dedup {

struct BatchCounts {
  std::size_t total = 0;
  // Distinct normalized sentences within the batch.
  std::size_t unique = 0;
};

struct DedupReport {
  std::size_t total = 0;
  std::size_t unique = 0;
  double unique_rate = 0.0;
  std::map<std::string, BatchCounts> per_batch;
};

nlohmann::json ToJson(const DedupReport& r);

struct DedupResult {
  std::vector<textgen::SentencePair> kept;
  DedupReport report;
};

// Keeps the first occurrence of each normalized target_text, in input order.
DedupResult Dedup(const std::vector<textgen::SentencePair>& pairs);

// Normalized sentences keyed by batch id, in first-seen batch order.
using BatchedSentences = std::vector<std::pair<std::string, std::vector<std::string>>>;
BatchedSentences GroupByBatch(const std::vector<textgen::SentencePair>& pairs);

// Unique rate of the union of the selected batches.
double UnionUniqueRate(const BatchedSentences& batches, const std::vector<std::size_t>& chosen);

struct CurvePoint {
  std::size_t batch_count = 0;
  double mean_unique_rate = 0.0;
  double std = 0.0;  // sample standard deviation over subsets
  std::size_t subsets = 0;
  bool exhaustive = false;
};

struct UniquenessCurve {
  std::vector<CurvePoint> points;
  std::size_t subsamples_per_point = 1000;
};

struct CurveOptions {
  std::size_t subsamples = 1000;
  std::uint64_t seed = 0;
  // When C(batches, k) <= subsamples, average over every k-subset exactly
  // instead of drawing random subsets.
  bool exhaustive_when_feasible = true;
};

// Throws InvalidInput when a batch count is 0 or exceeds the number of
// batches, or when counts are not strictly increasing.
UniquenessCurve ComputeUniquenessCurve(const BatchedSentences& batches,
                                       const std::vector<std::size_t>& batch_counts,
                                       const CurveOptions& options);

std::string CurveToCsv(const UniquenessCurve& curve);

}  // namespace synthcorpus::dedup
