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

#include "synthcorpus/dedup.h"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "synthcorpus/error.h"
#include "synthcorpus/rng.h"
#include "synthcorpus/text.h"

namespace synthcorpus::dedup {

using nlohmann::json;

json ToJson(const DedupReport& r) {
  json per_batch = json::object();
  for (const auto& [id, c] : r.per_batch) {
    per_batch[id] = {{"total", c.total}, {"unique", c.unique}};
  }
  return json{{"total", r.total},
              {"unique", r.unique},
              {"unique_rate", r.unique_rate},
              {"per_batch", per_batch}};
}

DedupResult Dedup(const std::vector<textgen::SentencePair>& pairs) {
  DedupResult result;
  std::unordered_set<std::string> seen;
  std::map<std::string, std::unordered_set<std::string>> per_batch_seen;
  for (const auto& p : pairs) {
    const std::string key = text::Canonical(p.target_text);
    auto& batch = result.report.per_batch[p.batch_id];
    ++batch.total;
    if (per_batch_seen[p.batch_id].insert(key).second) ++batch.unique;
    if (seen.insert(key).second) result.kept.push_back(p);
  }
  result.report.total = pairs.size();
  result.report.unique = result.kept.size();
  result.report.unique_rate =
      pairs.empty() ? 1.0 : static_cast<double>(result.kept.size()) / pairs.size();
  return result;
}

BatchedSentences GroupByBatch(const std::vector<textgen::SentencePair>& pairs) {
  BatchedSentences batches;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& p : pairs) {
    auto [it, inserted] = index.emplace(p.batch_id, batches.size());
    if (inserted) batches.emplace_back(p.batch_id, std::vector<std::string>{});
    batches[it->second].second.push_back(text::Canonical(p.target_text));
  }
  return batches;
}

double UnionUniqueRate(const BatchedSentences& batches, const std::vector<std::size_t>& chosen) {
  std::unordered_set<std::string> seen;
  std::size_t total = 0;
  for (std::size_t b : chosen) {
    for (const auto& s : batches.at(b).second) {
      seen.insert(s);
      ++total;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(seen.size()) / total;
}

namespace {

// Sentences interned to dense ids; a stamp array replaces a per-subset set.
class Interned {
 public:
  explicit Interned(const BatchedSentences& batches) {
    std::unordered_map<std::string, std::uint32_t> ids;
    for (const auto& [id, sentences] : batches) {
      std::vector<std::uint32_t> row;
      row.reserve(sentences.size());
      for (const auto& s : sentences) {
        auto [it, _] = ids.emplace(s, static_cast<std::uint32_t>(ids.size()));
        row.push_back(it->second);
      }
      batches_.push_back(std::move(row));
    }
    stamps_.assign(ids.size(), 0);
  }

  double Rate(const std::vector<std::size_t>& chosen) {
    ++generation_;
    std::size_t total = 0;
    std::size_t unique = 0;
    for (std::size_t b : chosen) {
      for (std::uint32_t s : batches_[b]) {
        ++total;
        if (stamps_[s] != generation_) {
          stamps_[s] = generation_;
          ++unique;
        }
      }
    }
    return total == 0 ? 1.0 : static_cast<double>(unique) / total;
  }

 private:
  std::vector<std::vector<std::uint32_t>> batches_;
  std::vector<std::uint64_t> stamps_;
  std::uint64_t generation_ = 0;
};

// C(n, k), saturating at |cap| + 1.
std::size_t Choose(std::size_t n, std::size_t k, std::size_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  long double c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    if (c > static_cast<long double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(std::llround(c));
}

struct Welford {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void Add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double SampleStd() const {
    return n > 1 ? std::sqrt(std::max(0.0, m2 / static_cast<double>(n - 1))) : 0.0;
  }
};

}  // namespace

UniquenessCurve ComputeUniquenessCurve(const BatchedSentences& batches,
                                       const std::vector<std::size_t>& batch_counts,
                                       const CurveOptions& options) {
  const std::size_t n_batches = batches.size();
  for (std::size_t i = 0; i < batch_counts.size(); ++i) {
    const std::size_t k = batch_counts[i];
    if (k == 0 || k > n_batches) {
      Throw(ErrorKind::kInvalidInput,
            fmt::format("batch count {} outside [1, {}]", k, n_batches));
    }
    if (i > 0 && k <= batch_counts[i - 1]) {
      Throw(ErrorKind::kInvalidInput, "batch counts must be strictly increasing");
    }
  }
  if (options.subsamples == 0) Throw(ErrorKind::kInvalidInput, "subsamples must be positive");

  Interned interned(batches);
  UniquenessCurve curve;
  curve.subsamples_per_point = options.subsamples;
  for (std::size_t point = 0; point < batch_counts.size(); ++point) {
    const std::size_t k = batch_counts[point];
    CurvePoint cp;
    cp.batch_count = k;
    Welford acc;
    const std::size_t n_subsets = Choose(n_batches, k, options.subsamples);
    if (options.exhaustive_when_feasible && n_subsets <= options.subsamples) {
      cp.exhaustive = true;
      std::vector<std::size_t> combo(k);
      for (std::size_t i = 0; i < k; ++i) combo[i] = i;
      while (true) {
        acc.Add(interned.Rate(combo));
        // Next k-combination in lexicographic order.
        std::size_t i = k;
        while (i > 0 && combo[i - 1] == n_batches - k + i - 1) --i;
        if (i == 0) break;
        ++combo[i - 1];
        for (std::size_t j = i; j < k; ++j) combo[j] = combo[j - 1] + 1;
      }
    } else {
      Rng rng = MakeRng(DeriveSeed(options.seed, static_cast<std::uint64_t>(k)));
      std::vector<std::size_t> order(n_batches);
      std::vector<std::size_t> chosen(k);
      for (std::size_t draw = 0; draw < options.subsamples; ++draw) {
        for (std::size_t i = 0; i < n_batches; ++i) order[i] = i;
        // Partial Fisher-Yates: the first k slots are a uniform k-subset.
        for (std::size_t i = 0; i < k; ++i) {
          const std::size_t j = i + UniformIndex(rng, n_batches - i);
          std::swap(order[i], order[j]);
          chosen[i] = order[i];
        }
        acc.Add(interned.Rate(chosen));
      }
    }
    cp.subsets = acc.n;
    cp.mean_unique_rate = acc.mean;
    cp.std = acc.SampleStd();
    curve.points.push_back(cp);
  }
  return curve;
}

std::string CurveToCsv(const UniquenessCurve& curve) {
  std::string out = "batch_count,mean_unique_rate,std\n";
  for (const auto& p : curve.points) {
    out += fmt::format("{},{:.6f},{:.6f}\n", p.batch_count, p.mean_unique_rate, p.std);
  }
  return out;
}

}  // namespace synthcorpus::dedup
