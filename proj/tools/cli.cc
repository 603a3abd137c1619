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

#include "cli.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "synthcorpus/asr_eval.h"
#include "synthcorpus/audio_augment.h"
#include "synthcorpus/config.h"
#include "synthcorpus/corpus.h"
#include "synthcorpus/dedup.h"
#include "synthcorpus/io.h"
#include "synthcorpus/model_clients.h"
#include "synthcorpus/rating_analysis.h"
#include "synthcorpus/review_service.h"
#include "synthcorpus/textgen.h"
#include "synthcorpus/tts_qc.h"

namespace synthcorpus::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool verbose = false;
  std::string env_prefix = std::string(config::kDefaultEnvPrefix);
};

struct Context {
  config::RunConfig cfg;
  fs::path out_dir;

  std::string Out(const std::string& name) const { return (out_dir / name).string(); }
};

Context MakeContext(const Globals& g) {
  Context ctx;
  ctx.cfg = g.config_path.empty() ? config::RunConfig(json::object(), g.env_prefix)
                                  : config::RunConfig::FromFile(g.config_path, g.env_prefix);
  if (g.seed) ctx.cfg.set_root_seed(*g.seed);
  ctx.out_dir = g.out_dir;
  fs::create_directories(ctx.out_dir);
  return ctx;
}

// Timestamps are kept out of the artifacts and recorded here instead.
void AppendRunLog(const Context& ctx, std::string_view stage, const json& details) {
  const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  std::ofstream log(ctx.Out("run_log.jsonl"), std::ios::app);
  log << json{{"time", textgen::FormatTimestamp(now)}, {"stage", stage}, {"details", details}}.dump()
      << '\n';
}

void WriteJson(const std::string& path, const json& j) { io::WriteFile(path, j.dump(2) + "\n"); }

std::string Dir(const std::string& path) {
  const fs::path p = fs::path(path).parent_path();
  return p.empty() ? std::string(".") : p.string();
}

// Rewrites |rel| (relative to |from_dir|) so it is relative to |to_dir|.
std::string Rebase(const std::string& rel, const std::string& from_dir, const fs::path& to_dir) {
  const fs::path p(rel);
  if (p.is_absolute()) return rel;
  const fs::path abs = fs::absolute(fs::path(from_dir) / p).lexically_normal();
  return abs.lexically_proximate(fs::absolute(to_dir).lexically_normal()).generic_string();
}

std::vector<std::size_t> ParseSizeList(const std::string& s, const std::string& flag) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start < s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string tok = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      const long long v = std::stoll(tok, &used);
      if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ValidationError({flag});
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<textgen::SentencePair> ReadPairs(const std::string& path) {
  return textgen::ReadPairsJsonl(path);
}

std::vector<tts_qc::TtsCandidate> ReadCandidates(const std::string& path) {
  std::vector<tts_qc::TtsCandidate> out;
  for (const auto& j : io::ReadJsonLines(path)) out.push_back(tts_qc::CandidateFromJson(j));
  return out;
}

void WriteCandidates(const std::string& path, const std::vector<tts_qc::TtsCandidate>& cs) {
  std::vector<json> rows;
  rows.reserve(cs.size());
  for (const auto& c : cs) rows.push_back(tts_qc::ToJson(c));
  io::WriteFile(path, io::ToJsonLines(rows));
}

// ---- stages ----------------------------------------------------------------

struct GenTextArgs {
  std::string out;
};

int GenText(const Context& ctx, const GenTextArgs& a) {
  const textgen::GenerationSpec spec = ctx.cfg.Generation();
  clients::ModelClient llm(spec.model);
  const std::string out = a.out.empty() ? ctx.Out("pairs.jsonl") : a.out;
  try {
    const auto result = textgen::GenerateCorpus(spec, llm);
    textgen::WritePairsJsonl(out, result.pairs);
    WriteJson(ctx.Out("gen_report.json"), textgen::ToJson(result.report));
    AppendRunLog(ctx, "gen-text", {{"seed", spec.seed}, {"pairs", result.pairs.size()}});
    fmt::print("gen-text: {} pairs ({} requests, {} duplicates) -> {}\n", result.pairs.size(),
               result.report.requests, result.report.duplicates, out);
  } catch (const textgen::GenerationAborted& e) {
    textgen::WritePairsJsonl(out + ".partial", e.partial().pairs);
    WriteJson(ctx.Out("gen_report.json"), textgen::ToJson(e.partial().report));
    throw;
  }
  return kExitOk;
}

struct DedupArgs {
  std::string in;
  std::string out;
};

int DedupStage(const Context& ctx, const DedupArgs& a) {
  const auto result = dedup::Dedup(ReadPairs(a.in));
  const std::string out = a.out.empty() ? ctx.Out("pairs_dedup.jsonl") : a.out;
  textgen::WritePairsJsonl(out, result.kept);
  WriteJson(ctx.Out("dedup_report.json"), dedup::ToJson(result.report));
  AppendRunLog(ctx, "dedup", {{"kept", result.kept.size()}});
  fmt::print("dedup: {} of {} unique ({:.4f}) -> {}\n", result.report.unique, result.report.total,
             result.report.unique_rate, out);
  return kExitOk;
}

struct CurveArgs {
  std::string in;
  std::string batch_counts;
  std::optional<std::size_t> subsamples;
  std::string out;
};

int UniqCurve(const Context& ctx, const CurveArgs& a) {
  const auto batches = dedup::GroupByBatch(ReadPairs(a.in));
  std::vector<std::size_t> counts;
  if (!a.batch_counts.empty()) {
    counts = ParseSizeList(a.batch_counts, "batch-counts");
  } else if (ctx.cfg.Has("uniq_curve.batch_counts")) {
    counts = ctx.cfg.Require<std::vector<std::size_t>>("uniq_curve.batch_counts");
  } else {
    counts.resize(batches.size());
    std::iota(counts.begin(), counts.end(), 1);
  }
  dedup::CurveOptions opt;
  opt.subsamples = a.subsamples.value_or(ctx.cfg.Get<std::size_t>("uniq_curve.subsamples", opt.subsamples));
  opt.seed = ctx.cfg.StageSeed("uniq_curve");
  const auto curve = dedup::ComputeUniquenessCurve(batches, counts, opt);
  const std::string out = a.out.empty() ? ctx.Out("uniq_curve.csv") : a.out;
  io::WriteFile(out, dedup::CurveToCsv(curve));
  AppendRunLog(ctx, "uniq-curve", {{"seed", opt.seed}, {"points", curve.points.size()}});
  fmt::print("uniq-curve: {} points over {} batches -> {}\n", curve.points.size(), batches.size(), out);
  return kExitOk;
}

struct SynthArgs {
  std::string in;
};

int Synth(const Context& ctx, const SynthArgs& a) {
  const auto pairs = ReadPairs(a.in);
  clients::ModelClient tts(ctx.cfg.Endpoint(clients::EndpointKind::kTts));
  const auto result = tts_qc::SynthesizeCandidates(pairs, tts, ctx.out_dir.string());
  WriteCandidates(ctx.Out("candidates.jsonl"), result.candidates);
  std::vector<json> failures;
  for (const auto& f : result.failures) failures.push_back({{"utterance_id", f.utterance_id}, {"reason", f.reason}});
  io::WriteFile(ctx.Out("synth_failures.jsonl"), io::ToJsonLines(failures));
  AppendRunLog(ctx, "synth", {{"candidates", result.candidates.size()}, {"failures", failures.size()}});
  fmt::print("synth: {} clips, {} failures -> {}\n", result.candidates.size(), failures.size(),
             ctx.Out("candidates.jsonl"));
  return kExitOk;
}

struct FilterArgs {
  std::string in;
  std::string audio_root;
  bool no_score = false;
};

int TtsFilter(const Context& ctx, const FilterArgs& a) {
  auto candidates = ReadCandidates(a.in);
  const tts_qc::FilterPolicy policy = ctx.cfg.Filter();
  if (!a.no_score) {
    clients::ModelClient asr(ctx.cfg.Endpoint(clients::EndpointKind::kAsr));
    const std::string root = a.audio_root.empty() ? Dir(a.in) : a.audio_root;
    tts_qc::ScoreCandidates(candidates, asr, policy.ratio_measure, root);
  }
  const auto result = tts_qc::FilterOutliers(candidates, policy);
  // Audio paths stay relative to the input's directory; rebase for out_dir.
  auto rebase = [&](std::vector<tts_qc::TtsCandidate> cs) {
    const std::string root = a.audio_root.empty() ? Dir(a.in) : a.audio_root;
    for (auto& c : cs) c.audio = Rebase(c.audio, root, ctx.out_dir);
    return cs;
  };
  WriteCandidates(ctx.Out("kept.jsonl"), rebase(result.kept));
  WriteCandidates(ctx.Out("removed.jsonl"), rebase(result.removed));
  WriteCandidates(ctx.Out("pending.jsonl"), rebase(result.pending));
  WriteJson(ctx.Out("filter_report.json"), tts_qc::ToJson(result.report));
  AppendRunLog(ctx, "tts-filter", {{"kept", result.kept.size()}, {"removed", result.removed.size()}});
  fmt::print("tts-filter: kept {}, removed {} ({:.4f}), pending {}\n", result.report.kept,
             result.report.removed, result.report.removal_fraction, result.report.pending);
  return kExitOk;
}

struct RebalanceArgs {
  std::string in;
  std::optional<double> target;
};

int Rebalance(const Context& ctx, const RebalanceArgs& a) {
  const auto kept = ReadCandidates(a.in);
  const double target =
      a.target.value_or(ctx.cfg.Get("rebalance.question_share_target",
                                    ctx.cfg.Get("filter.question_share_target", 0.25)));
  const std::uint64_t seed = ctx.cfg.StageSeed("rebalance");
  tts_qc::RebalanceResult info;
  auto subset = tts_qc::RebalanceQuestions(kept, target, seed, &info);
  const std::string root = Dir(a.in);
  for (auto& c : subset) c.audio = Rebase(c.audio, root, ctx.out_dir);
  WriteCandidates(ctx.Out("rebalanced.jsonl"), subset);

  corpus::Manifest m;
  const std::string default_speaker =
      ctx.cfg.Get<std::string>("endpoints.tts.model_id", "tts");
  m.provenance = {{"stage", "rebalance"}, {"source", fs::path(a.in).filename().string()}};
  for (const auto& c : subset) {
    corpus::Utterance u;
    u.id = c.utterance_id;
    u.transcript = c.source_text;
    u.audio = c.audio;
    u.duration = wav::Read((ctx.out_dir / c.audio).string()).duration_seconds();
    u.speaker_id = ctx.cfg.Get<std::string>("rebalance.speaker_id", default_speaker);
    u.gender = corpus::ParseGender(ctx.cfg.Get<std::string>("rebalance.gender", "unknown"));
    u.origin = corpus::Origin::kSynthetic;
    u.dataset_tag = ctx.cfg.Get<std::string>("rebalance.dataset_tag", "synthetic");
    m.utterances.push_back(std::move(u));
  }
  corpus::WriteManifest(ctx.Out("synthetic_manifest.jsonl"), m);
  AppendRunLog(ctx, "rebalance", {{"seed", seed}, {"kept", subset.size()}, {"warning", info.warning}});
  if (!info.warning.empty()) spdlog::warn("rebalance: {}", info.warning);
  fmt::print("rebalance: questions {} -> {} of {} items\n", info.questions_before,
             info.questions_after, info.total_after);
  return kExitOk;
}

struct ManifestArgs {
  std::string manifest;
};

int Augment(const Context& ctx, const ManifestArgs& a) {
  const auto policy = ctx.cfg.Augment();
  const corpus::Manifest in = corpus::ReadManifest(a.manifest);
  augment::AugmentPaths paths{Dir(a.manifest), ctx.Out("augmented")};
  auto [out, log] = augment::AugmentCorpus(in, policy, paths);
  for (auto& u : out.utterances) u.audio = "augmented/" + u.audio;
  corpus::WriteManifest(ctx.Out("augmented_manifest.jsonl"), out);
  io::WriteFile(ctx.Out("augment_log.jsonl"), augment::ToJsonl(log));
  AppendRunLog(ctx, "augment", {{"seed", policy.seed}, {"entries", log.entries.size()}, {"skips", log.skips.size()}});
  fmt::print("augment: {} augmented, {} skipped\n", log.entries.size(), log.skips.size());
  return kExitOk;
}

int SplitStage(const Context& ctx, const ManifestArgs& a) {
  const auto spec = ctx.cfg.Split();
  const corpus::Manifest in = corpus::ReadManifest(a.manifest);
  const auto result = corpus::Split(in, spec);
  const std::string root = Dir(a.manifest);
  auto rebased = [&](corpus::Manifest m) {
    for (auto& u : m.utterances) u.audio = Rebase(u.audio, root, ctx.out_dir);
    return m;
  };
  for (const auto& [name, m] : result.splits) corpus::WriteManifest(ctx.Out(name + ".jsonl"), rebased(m));
  corpus::Manifest unassigned;
  unassigned.utterances = result.unassigned;
  corpus::WriteManifest(ctx.Out("unassigned.jsonl"), rebased(unassigned));
  WriteJson(ctx.Out("split_summary.json"), corpus::SummaryJson(spec, result));
  AppendRunLog(ctx, "split", {{"seed", spec.seed}, {"groups", result.groups}});
  for (const auto& [name, m] : result.splits) {
    fmt::print("split: {} {:.4f} h ({} utterances)\n", name, m.total_hours(), m.utterances.size());
  }
  return kExitOk;
}

struct MixArgs {
  std::string real;
  std::string synthetic;
};

int MixStage(const Context& ctx, const MixArgs& a) {
  const auto spec = ctx.cfg.Mix();
  corpus::Manifest real = corpus::ReadManifest(a.real);
  corpus::Manifest synth = corpus::ReadManifest(a.synthetic);
  for (auto& u : real.utterances) u.audio = Rebase(u.audio, Dir(a.real), ctx.out_dir);
  for (auto& u : synth.utterances) u.audio = Rebase(u.audio, Dir(a.synthetic), ctx.out_dir);
  const auto [mixed, report] = corpus::Mix(real, synth, spec);
  corpus::WriteManifest(ctx.Out("mixed.jsonl"), mixed);
  WriteJson(ctx.Out("mix_report.json"), corpus::ToJson(report, spec));
  AppendRunLog(ctx, "mix", {{"seed", spec.seed}});
  fmt::print("mix: {:.4f} h real + {:.4f} h synthetic\n", report.real_hours, report.synthetic_hours);
  return kExitOk;
}

struct EvalArgs {
  std::string refs;
  std::string hyps;
  std::string manifest;
  std::optional<std::size_t> iterations;
  std::string out;
  // errors only
  std::optional<std::size_t> top_k;
  std::string language;
};

struct Paired {
  std::vector<std::string> refs;
  std::vector<std::string> hyps;
  std::vector<std::string> genders;
};

Paired LoadPaired(const EvalArgs& a) {
  Paired p;
  if (!a.manifest.empty()) {
    const corpus::Manifest m = corpus::ReadManifest(a.manifest);
    for (const auto& u : m.utterances) {
      if (!u.hypothesis) throw ValidationError({"hypothesis (" + u.id + ")"});
      p.refs.push_back(u.transcript);
      p.hyps.push_back(*u.hypothesis);
      p.genders.emplace_back(corpus::GenderName(u.gender));
    }
    return p;
  }
  if (a.refs.empty() || a.hyps.empty()) throw ValidationError({"refs", "hyps"});
  p.refs = io::ReadLines(a.refs);
  p.hyps = io::ReadLines(a.hyps);
  return p;
}

asr_eval::ScoreOptions ScoreOpts(const Context& ctx) {
  asr_eval::ScoreOptions o;
  o.normalizer = ctx.cfg.Normalizer();
  o.cer_include_spaces = ctx.cfg.Get("eval.cer_include_spaces", false);
  return o;
}

asr_eval::BootstrapOptions BootOpts(const Context& ctx, const EvalArgs& a, std::string_view stage) {
  asr_eval::BootstrapOptions b;
  b.iterations = a.iterations.value_or(ctx.cfg.Get<std::size_t>("eval.iterations", b.iterations));
  b.seed = ctx.cfg.StageSeed(stage);
  return b;
}

int Eval(const Context& ctx, const EvalArgs& a) {
  const Paired p = LoadPaired(a);
  const auto report = asr_eval::BootstrapEval(p.refs, p.hyps, ScoreOpts(ctx), BootOpts(ctx, a, "eval"));
  const std::string out = a.out.empty() ? ctx.Out("eval_report.json") : a.out;
  WriteJson(out, asr_eval::ToJson(report));
  AppendRunLog(ctx, "eval", {{"items", report.n_items}});
  fmt::print("eval: WER {:.4f} (bootstrap {:.4f} ± {:.4f}), CER {:.4f} (bootstrap {:.4f} ± {:.4f}), n={}\n",
             report.wer, report.bootstrap.wer_mean, report.bootstrap.wer_std, report.cer,
             report.bootstrap.cer_mean, report.bootstrap.cer_std, report.n_items);
  return kExitOk;
}

int EvalGender(const Context& ctx, const EvalArgs& a) {
  if (a.manifest.empty()) throw ValidationError({"manifest"});
  const Paired p = LoadPaired(a);
  const auto report = asr_eval::EvalByGroup(p.refs, p.hyps, p.genders, ScoreOpts(ctx),
                                            BootOpts(ctx, a, "eval_gender"), {"male", "female"});
  const std::string out = a.out.empty() ? ctx.Out("eval_gender_report.json") : a.out;
  WriteJson(out, asr_eval::ToJson(report));
  AppendRunLog(ctx, "eval-gender", {{"items", report.n_items}});
  for (const auto& [g, r] : report.per_group) {
    fmt::print("eval-gender: {} n={} WER {:.4f} CER {:.4f}\n", g, r.n_items, r.wer, r.cer);
  }
  return kExitOk;
}

int Errors(const Context& ctx, const EvalArgs& a) {
  const Paired p = LoadPaired(a);
  const std::size_t top_k = a.top_k.value_or(ctx.cfg.Get<std::size_t>("errors.top_k", 50));
  const std::string language =
      a.language.empty() ? ctx.cfg.Get<std::string>("errors.language", "und") : a.language;
  const auto inv = asr_eval::BuildErrorInventory(p.refs, p.hyps, ctx.cfg.Normalizer(), top_k);
  WriteJson(ctx.Out("error_inventory.json"), asr_eval::ToJson(inv));
  asr_eval::ExportAdjudication(inv, language, ctx.Out("adjudication.csv"));
  AppendRunLog(ctx, "errors", {{"rows", inv.rows.size()}});
  fmt::print("errors: {} inventory rows -> {}\n", inv.rows.size(), ctx.Out("adjudication.csv"));
  return kExitOk;
}

struct ServeArgs {
  std::vector<std::string> studies;
  std::string log_dir;
  std::string host;
  std::optional<int> port;
};

int RateServe(const Context& ctx, const ServeArgs& a) {
  std::vector<std::string> study_paths = a.studies;
  if (study_paths.empty()) study_paths = ctx.cfg.Require<std::vector<std::string>>("review.studies");
  const std::string log_dir =
      a.log_dir.empty() ? ctx.cfg.Get<std::string>("review.log_dir", ctx.Out("review_logs")) : a.log_dir;
  std::vector<std::shared_ptr<review::ReviewStore>> stores;
  for (const auto& path : study_paths) {
    review::Study study = review::ReadStudy(path);
    const std::string log = (fs::path(log_dir) / (study.study_id + ".jsonl")).string();
    stores.push_back(std::make_shared<review::ReviewStore>(std::move(study), log));
  }
  review::ReviewServer server(std::move(stores));
  review::ServerOptions opt;
  opt.host = a.host.empty() ? ctx.cfg.Get<std::string>("review.host", opt.host) : a.host;
  opt.port = a.port.value_or(ctx.cfg.Get<int>("review.port", 8080));
  const int port = server.Bind(opt);
  fmt::print("rate-serve: listening on http://{}:{}\n", opt.host, port);
  std::fflush(stdout);
  server.Serve();
  return kExitOk;
}

struct RatingsArgs {
  std::string ratings;
  std::string language;
  std::string metric = "readability";
  std::string model;
  std::string grid;
  std::string sentence_grid;
  std::optional<std::size_t> n_sentences;
  std::optional<std::size_t> iterations;
  bool listwise = false;
};

std::string PickModel(const std::vector<ratings::RatingRecord>& rs, const std::string& requested) {
  if (!requested.empty()) return requested;
  std::set<std::string> models;
  for (const auto& r : rs) models.insert(r.model_id);
  if (models.size() != 1) throw ValidationError({"model"});
  return *models.begin();
}

int RatingsSummary(const Context& ctx, const RatingsArgs& a) {
  const auto rs = ratings::ReadCsv(a.ratings);
  const std::string language =
      a.language.empty() ? ctx.cfg.Get<std::string>("ratings.language", "") : a.language;
  const auto summary = ratings::Summarize(rs, language);
  WriteJson(ctx.Out("ratings_summary.json"), ratings::ToJson(summary));
  AppendRunLog(ctx, "ratings-analyze summary", {{"records", rs.size()}});
  for (const auto& g : summary) {
    for (const auto& m : g.metrics) {
      fmt::print("{}\t{}\t{}\t{}\n", g.model_id, ratings::MetricName(m.metric), m.n,
                 ratings::FormatMeanStd(m));
    }
  }
  return kExitOk;
}

int RatingsAnova(const Context& ctx, const RatingsArgs& a) {
  const auto rs = ratings::ReadCsv(a.ratings);
  const auto table = ratings::AnovaTwoWay(rs, ratings::ParseMetric(a.metric));
  WriteJson(ctx.Out("anova.json"), ratings::ToJson(table));
  AppendRunLog(ctx, "ratings-analyze anova", {{"records", rs.size()}});
  for (const auto* row : {&table.model, &table.rater}) {
    fmt::print("{}\tSS={:.6g}\tdf={:g}\tF={:.6g}\tp={:.6g}\n", row->source, row->sum_of_squares,
               row->df, row->f, row->p);
  }
  fmt::print("{}\tSS={:.6g}\tdf={:g}\tMS={:.6g}\n", table.residual.source, table.residual.sum_of_squares,
             table.residual.df, table.residual.mean_square);
  return kExitOk;
}

int RatingsRaterBootstrap(const Context& ctx, const RatingsArgs& a) {
  const auto rs = ratings::ReadCsv(a.ratings);
  const std::string model = PickModel(rs, a.model);
  std::vector<std::size_t> grid;
  if (!a.grid.empty()) {
    grid = ParseSizeList(a.grid, "grid");
  } else {
    std::set<std::string> raters;
    for (const auto& r : rs) {
      if (r.model_id == model) raters.insert(r.rater_id);
    }
    for (std::size_t k = 1; k <= raters.size(); ++k) grid.push_back(k);
  }
  ratings::RaterBootstrapOptions opt;
  opt.metric = ratings::ParseMetric(a.metric);
  opt.n_sentences = a.n_sentences.value_or(ctx.cfg.Get<std::size_t>("ratings.n_sentences", opt.n_sentences));
  opt.iterations = a.iterations.value_or(ctx.cfg.Get<std::size_t>("ratings.iterations", opt.iterations));
  opt.seed = ctx.cfg.StageSeed("rater_bootstrap");
  const auto points = ratings::RaterBootstrap(rs, model, grid, opt);
  WriteJson(ctx.Out("rater_bootstrap.json"), ratings::ToJson(points));
  AppendRunLog(ctx, "ratings-analyze rater-bootstrap", {{"seed", opt.seed}});
  for (const auto& p : points) {
    fmt::print("raters={}\tmean={:.4f}\tci=[{:.4f}, {:.4f}]\n", p.n_raters, p.mean, p.ci_low, p.ci_high);
  }
  return kExitOk;
}

int RatingsIccGrid(const Context& ctx, const RatingsArgs& a) {
  const auto rs = ratings::ReadCsv(a.ratings);
  const std::string model = PickModel(rs, a.model);
  const auto lm = ratings::BuildMatrix(rs, model, ratings::ParseMetric(a.metric));
  std::vector<std::size_t> rater_grid, sentence_grid;
  if (!a.grid.empty()) {
    rater_grid = ParseSizeList(a.grid, "grid");
  } else {
    for (std::size_t k = 2; k <= lm.rater_ids.size(); ++k) rater_grid.push_back(k);
  }
  if (!a.sentence_grid.empty()) {
    sentence_grid = ParseSizeList(a.sentence_grid, "sentence-grid");
  } else {
    sentence_grid.push_back(lm.sentence_ids.size());
  }
  ratings::IccGridOptions opt;
  opt.iterations = a.iterations.value_or(ctx.cfg.Get<std::size_t>("ratings.iterations", opt.iterations));
  opt.listwise_deletion = a.listwise || ctx.cfg.Get("ratings.listwise_deletion", false);
  opt.seed = ctx.cfg.StageSeed("icc_grid");
  const auto result = ratings::IccGrid(lm.values, rater_grid, sentence_grid, opt);
  WriteJson(ctx.Out("icc_grid.json"), ratings::ToJson(result));
  AppendRunLog(ctx, "ratings-analyze icc-grid", {{"seed", opt.seed}});
  for (const auto& c : result.cells) {
    fmt::print("raters={}\tsentences={}\ticc={:.4f}\tdraws={}\n", c.n_raters, c.n_sentences,
               c.mean_icc, c.valid_draws);
  }
  return kExitOk;
}

int ReportFailure(const std::exception& e) {
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    fmt::print(stderr, "error: {}\n", v->what());
    return kExitValidation;
  }
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    fmt::print(stderr, "error: {}\n", err->what());
    return IsValidationKind(err->kind()) ? kExitValidation : kExitRuntime;
  }
  if (dynamic_cast<const json::exception*>(&e) != nullptr) {
    fmt::print(stderr, "error: malformed JSON: {}\n", e.what());
    return kExitValidation;
  }
  fmt::print(stderr, "error: {}\n", e.what());
  return kExitRuntime;
}

void ConfigureLogging(bool verbose) {
  static const bool once = [] {
    spdlog::set_default_logger(spdlog::stderr_color_mt("synthcorpus"));
    return true;
  }();
  (void)once;
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
}

}  // namespace

int Run(int argc, const char* const* argv) {
  CLI::App app{"Build, filter, mix and evaluate synthetic speech corpora.", "synthcorpus"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Root seed; overrides the config");
  app.add_option("--out-dir", g.out_dir, "Directory for artifacts")->capture_default_str();
  app.add_flag("--verbose,-v", g.verbose, "Debug logging");
  app.add_option("--env-prefix", g.env_prefix, "Prefix of endpoint override variables")
      ->capture_default_str();

  std::function<int(const Context&)> action;
  auto bind = [&](CLI::App* sub, auto fn, auto& args) {
    sub->callback([&action, fn, &args] { action = [fn, &args](const Context& c) { return fn(c, args); }; });
  };

  GenTextArgs gen;
  auto* s_gen = app.add_subcommand("gen-text", "Generate parallel sentence pairs with the LLM endpoint");
  s_gen->add_option("--out", gen.out, "Output JSONL (default <out-dir>/pairs.jsonl)");
  bind(s_gen, GenText, gen);

  DedupArgs dd;
  auto* s_dd = app.add_subcommand("dedup", "Drop duplicate sentences (first occurrence kept)");
  s_dd->add_option("--in", dd.in, "Sentence pairs JSONL")->required();
  s_dd->add_option("--out", dd.out, "Output JSONL");
  bind(s_dd, DedupStage, dd);

  CurveArgs cv;
  auto* s_cv = app.add_subcommand("uniq-curve", "Unique-sentence rate against number of batches");
  s_cv->add_option("--in", cv.in, "Sentence pairs JSONL")->required();
  s_cv->add_option("--batch-counts", cv.batch_counts, "Comma separated, e.g. 1,2,5,10");
  s_cv->add_option("--subsamples", cv.subsamples, "Random subsets per point");
  s_cv->add_option("--out", cv.out, "Output CSV");
  bind(s_cv, UniqCurve, cv);

  SynthArgs sy;
  auto* s_sy = app.add_subcommand("synth", "Synthesize audio for sentence pairs with the TTS endpoint");
  s_sy->add_option("--in", sy.in, "Sentence pairs JSONL")->required();
  bind(s_sy, Synth, sy);

  FilterArgs fl;
  auto* s_fl = app.add_subcommand("tts-filter", "Re-transcribe synthetic audio and drop length-ratio outliers");
  s_fl->add_option("--in", fl.in, "Candidates JSONL")->required();
  s_fl->add_option("--audio-root", fl.audio_root, "Root for candidate audio paths");
  s_fl->add_flag("--no-score", fl.no_score, "Candidates are already scored");
  bind(s_fl, TtsFilter, fl);

  RebalanceArgs rb;
  auto* s_rb = app.add_subcommand("rebalance", "Subsample questions down to the target share");
  s_rb->add_option("--in", rb.in, "Kept candidates JSONL")->required();
  s_rb->add_option("--target", rb.target, "Question share target");
  bind(s_rb, Rebalance, rb);

  ManifestArgs ag;
  auto* s_ag = app.add_subcommand("augment", "Level and noise-mix a manifest's audio");
  s_ag->add_option("--manifest", ag.manifest, "Input manifest JSONL")->required();
  bind(s_ag, Augment, ag);

  ManifestArgs sp;
  auto* s_sp = app.add_subcommand("split", "Speaker- and transcript-exclusive splits");
  s_sp->add_option("--manifest", sp.manifest, "Input manifest JSONL")->required();
  bind(s_sp, SplitStage, sp);

  MixArgs mx;
  auto* s_mx = app.add_subcommand("mix", "Mix real and synthetic hours");
  s_mx->add_option("--real", mx.real, "Real manifest JSONL")->required();
  s_mx->add_option("--synthetic", mx.synthetic, "Synthetic manifest JSONL")->required();
  bind(s_mx, MixStage, mx);

  EvalArgs ev, eg, er;
  auto add_eval_inputs = [](CLI::App* sub, EvalArgs& a) {
    sub->add_option("--refs", a.refs, "Reference transcripts, one per line");
    sub->add_option("--hyps", a.hyps, "Hypotheses, one per line");
    sub->add_option("--manifest", a.manifest, "Manifest with transcript and hypothesis");
  };
  auto* s_ev = app.add_subcommand("eval", "Corpus WER/CER with bootstrap statistics");
  add_eval_inputs(s_ev, ev);
  s_ev->add_option("--iterations", ev.iterations, "Bootstrap iterations");
  s_ev->add_option("--out", ev.out, "Report JSON");
  bind(s_ev, Eval, ev);

  auto* s_eg = app.add_subcommand("eval-gender", "WER/CER disaggregated by speaker gender");
  s_eg->add_option("--manifest", eg.manifest, "Manifest with transcript, hypothesis, gender")->required();
  s_eg->add_option("--iterations", eg.iterations, "Bootstrap iterations");
  s_eg->add_option("--out", eg.out, "Report JSON");
  bind(s_eg, EvalGender, eg);

  auto* s_er = app.add_subcommand("errors", "Word error inventory and adjudication sheet");
  add_eval_inputs(s_er, er);
  s_er->add_option("--top-k", er.top_k, "Inventory rows to keep");
  s_er->add_option("--language", er.language, "Language label for the adjudication sheet");
  bind(s_er, Errors, er);

  ServeArgs sv;
  auto* s_sv = app.add_subcommand("rate-serve", "Serve blinded rating tasks over HTTP");
  s_sv->add_option("--study", sv.studies, "Study definition JSON (repeatable)");
  s_sv->add_option("--log-dir", sv.log_dir, "Directory for rating logs");
  s_sv->add_option("--host", sv.host, "Bind address");
  s_sv->add_option("--port", sv.port, "Port (0 picks a free one)");
  bind(s_sv, RateServe, sv);

  RatingsArgs ra;
  auto* s_ra = app.add_subcommand("ratings-analyze", "Statistics over collected ratings");
  s_ra->require_subcommand(1);
  auto add_ratings = [&](CLI::App* sub) {
    sub->add_option("--ratings", ra.ratings, "Ratings CSV")->required();
    sub->add_option("--metric", ra.metric, "Metric name")->capture_default_str();
  };
  auto* r_sum = s_ra->add_subcommand("summary", "Mean ± std per model and metric");
  add_ratings(r_sum);
  r_sum->add_option("--language", ra.language, "Language label");
  bind(r_sum, RatingsSummary, ra);
  auto* r_an = s_ra->add_subcommand("anova", "Two-way ANOVA, model and rater as factors");
  add_ratings(r_an);
  bind(r_an, RatingsAnova, ra);
  auto* r_rb = s_ra->add_subcommand("rater-bootstrap", "Mean and 95% CI against rater count");
  add_ratings(r_rb);
  r_rb->add_option("--model", ra.model, "Model id (required when several are present)");
  r_rb->add_option("--grid", ra.grid, "Rater counts, comma separated");
  r_rb->add_option("--n-sentences", ra.n_sentences, "Sentences per draw");
  r_rb->add_option("--iterations", ra.iterations, "Bootstrap iterations");
  bind(r_rb, RatingsRaterBootstrap, ra);
  auto* r_icc = s_ra->add_subcommand("icc-grid", "ICC(2,k) over rater and sentence counts");
  add_ratings(r_icc);
  r_icc->add_option("--model", ra.model, "Model id (required when several are present)");
  r_icc->add_option("--grid", ra.grid, "Rater counts, comma separated");
  r_icc->add_option("--sentence-grid", ra.sentence_grid, "Sentence counts, comma separated");
  r_icc->add_option("--iterations", ra.iterations, "Draws per cell");
  r_icc->add_flag("--listwise", ra.listwise, "Drop sentences with missing ratings");
  bind(r_icc, RatingsIccGrid, ra);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ExtrasError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  ConfigureLogging(g.verbose);
  try {
    const Context ctx = MakeContext(g);
    return action(ctx);
  } catch (const std::exception& e) {
    return ReportFailure(e);
  }
}

}  // namespace synthcorpus::cli
