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

#include "synthcorpus/audio_augment.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <optional>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "synthcorpus/error.h"
#include "synthcorpus/rng.h"

namespace synthcorpus::augment {

namespace fs = std::filesystem;
using nlohmann::json;

void AugmentPolicy::Validate() const {
  std::vector<std::string> bad;
  if (!(snr_std >= 0.0)) bad.emplace_back("snr_std");
  if (!(amp_std >= 0.0)) bad.emplace_back("amp_std");
  if (!std::isfinite(snr_mean)) bad.emplace_back("snr_mean");
  if (!std::isfinite(amp_mean)) bad.emplace_back("amp_mean");
  if (mix_enabled && noise_bank.empty()) bad.emplace_back("noise_bank");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

double MeanPower(std::span<const float> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * static_cast<double>(v);
  return acc / static_cast<double>(x.size());
}

double RmsDbfs(std::span<const float> x) { return 10.0 * std::log10(MeanPower(x)); }

double PeakAbs(std::span<const float> x) {
  double peak = 0.0;
  for (float v : x) peak = std::max(peak, std::abs(static_cast<double>(v)));
  return peak;
}

MixResult MixAtSnr(std::span<const float> signal, std::span<const float> noise, double snr_db) {
  if (signal.empty()) Throw(ErrorKind::kZeroSignal, "empty signal");
  MixResult out;
  if (std::isinf(snr_db) && snr_db > 0) {
    out.samples.assign(signal.begin(), signal.end());
    return out;
  }
  if (noise.empty()) Throw(ErrorKind::kZeroNoise, "empty noise");
  const double p_signal = MeanPower(signal);
  if (p_signal == 0.0) Throw(ErrorKind::kZeroSignal, "signal has zero power");

  // Power of the noise as it will be applied (looped / truncated).
  double acc = 0.0;
  for (std::size_t i = 0; i < signal.size(); ++i) {
    const double v = noise[i % noise.size()];
    acc += v * v;
  }
  const double p_noise = acc / static_cast<double>(signal.size());
  if (p_noise == 0.0) Throw(ErrorKind::kZeroNoise, "noise has zero power");

  out.noise_scale = std::sqrt(p_signal / (p_noise * std::pow(10.0, snr_db / 10.0)));
  out.samples.resize(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) {
    out.samples[i] = static_cast<float>(static_cast<double>(signal[i]) +
                                        out.noise_scale * noise[i % noise.size()]);
  }
  return out;
}

LevelResult SetLevel(std::span<const float> signal, double target_dbfs) {
  const double power = MeanPower(signal);
  if (power == 0.0) Throw(ErrorKind::kZeroSignal, "cannot level a silent signal");
  LevelResult out;
  const double current = 10.0 * std::log10(power);
  out.gain = std::pow(10.0, (target_dbfs - current) / 20.0);
  const double peak = PeakAbs(signal);
  const double ceiling = std::pow(10.0, kPeakCeilingDbfs / 20.0);
  if (peak * out.gain > ceiling) {
    out.gain = ceiling / peak;
    out.peak_clamped = true;
  }
  out.samples.resize(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) {
    out.samples[i] = static_cast<float>(out.gain * signal[i]);
  }
  return out;
}

AugmentDraw DrawParams(const AugmentPolicy& policy, std::size_t noise_count,
                       std::uint64_t index) {
  Rng rng = MakeRng(DeriveSeed(policy.seed, index));
  AugmentDraw d;
  if (policy.mix_enabled) {
    d.snr = policy.snr_mean + policy.snr_std * StandardNormal(rng);
    for (int tries = 0; d.snr < policy.snr_floor && tries < 1000; ++tries) {
      d.snr = policy.snr_mean + policy.snr_std * StandardNormal(rng);
    }
    d.snr = std::max(d.snr, policy.snr_floor);
  } else {
    d.snr = kNoMixSnr;
  }
  d.level = policy.amp_mean + policy.amp_std * StandardNormal(rng);
  d.noise_index = noise_count > 0 ? UniformIndex(rng, noise_count) : 0;
  return d;
}

json ToJson(const AugmentLogEntry& e) {
  json j{{"utterance_id", e.utterance_id},
         {"noise_id", e.noise_id},
         {"snr", std::isinf(e.snr) ? json(nullptr) : json(e.snr)},
         {"level", e.level}};
  if (e.peak_clamped) j["peak_clamped"] = true;
  if (e.clipped_samples > 0) j["clipped_samples"] = e.clipped_samples;
  return j;
}

std::string ToJsonl(const AugmentLog& log) {
  std::string out;
  for (const auto& e : log.entries) {
    out += ToJson(e).dump();
    out.push_back('\n');
  }
  for (const auto& s : log.skips) {
    out += json{{"utterance_id", s.utterance_id}, {"skipped", s.reason}}.dump();
    out.push_back('\n');
  }
  return out;
}

namespace {

struct NoiseClip {
  std::string id;
  Audio audio;
};

std::vector<NoiseClip> LoadNoiseBank(const std::string& dir) {
  if (!fs::is_directory(dir)) Throw(ErrorKind::kIo, "noise bank is not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<NoiseClip> bank;
  for (const auto& f : files) {
    bank.push_back({fs::relative(f, dir).generic_string(), wav::Read(f.string())});
  }
  if (bank.empty()) Throw(ErrorKind::kInvalidInput, "noise bank has no .wav files: " + dir);
  return bank;
}

}  // namespace

std::pair<corpus::Manifest, AugmentLog> AugmentCorpus(const corpus::Manifest& manifest,
                                                      const AugmentPolicy& policy,
                                                      const AugmentPaths& paths) {
  policy.Validate();
  const std::vector<NoiseClip> bank =
      policy.mix_enabled ? LoadNoiseBank(policy.noise_bank) : std::vector<NoiseClip>{};

  const std::size_t n = manifest.utterances.size();
  std::vector<std::optional<AugmentLogEntry>> entries(n);
  std::vector<std::string> skip_reason(n);

  auto process = [&](std::size_t i) {
    const corpus::Utterance& u = manifest.utterances[i];
    const AugmentDraw draw = DrawParams(policy, bank.size(), i);
    try {
      fs::path in_path(u.audio);
      if (in_path.is_relative() && !paths.audio_root.empty()) in_path = paths.audio_root / in_path;
      const Audio clean = wav::Read(in_path.string());
      LevelResult leveled = SetLevel(clean.samples, draw.level);
      AugmentLogEntry entry;
      entry.utterance_id = u.id;
      entry.snr = draw.snr;
      entry.level = draw.level;
      entry.peak_clamped = leveled.peak_clamped;
      Audio out;
      out.sample_rate = clean.sample_rate;
      if (policy.mix_enabled) {
        const NoiseClip& noise = bank[draw.noise_index];
        if (noise.audio.sample_rate != clean.sample_rate) {
          Throw(ErrorKind::kInvalidInput,
                fmt::format("noise '{}' is {} Hz, utterance is {} Hz", noise.id,
                            noise.audio.sample_rate, clean.sample_rate));
        }
        entry.noise_id = noise.id;
        out.samples = MixAtSnr(leveled.samples, noise.audio.samples, draw.snr).samples;
      } else {
        out.samples = std::move(leveled.samples);
      }
      fs::path out_path(u.audio);
      if (out_path.is_absolute()) out_path = out_path.filename();
      wav::Write((fs::path(paths.out_root) / out_path).string(), out, &entry.clipped_samples);
      entries[i] = std::move(entry);
    } catch (const std::exception& e) {
      skip_reason[i] = e.what();
    }
  };

  std::atomic<std::size_t> next{0};
  const std::size_t n_workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), n));
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < n_workers; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) process(i);
    });
  }
  for (auto& t : workers) t.join();

  corpus::Manifest out;
  out.provenance = {{"augmented_from", manifest.provenance},
                    {"snr_mean", policy.snr_mean},
                    {"snr_std", policy.snr_std},
                    {"amp_mean", policy.amp_mean},
                    {"amp_std", policy.amp_std},
                    {"mix_enabled", policy.mix_enabled},
                    {"seed", policy.seed}};
  AugmentLog log;
  for (std::size_t i = 0; i < n; ++i) {
    const corpus::Utterance& u = manifest.utterances[i];
    if (entries[i]) {
      corpus::Utterance v = u;
      fs::path rel(u.audio);
      if (rel.is_absolute()) rel = rel.filename();
      v.audio = rel.generic_string();
      out.utterances.push_back(std::move(v));
      log.entries.push_back(std::move(*entries[i]));
    } else {
      spdlog::warn("augment: skipped {}: {}", u.id, skip_reason[i]);
      log.skips.push_back({u.id, skip_reason[i]});
    }
  }
  return {std::move(out), std::move(log)};
}

}  // namespace synthcorpus::augment
