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
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "synthcorpus/audio_io.h"
#include "synthcorpus/corpus.h"

namespace synthcorpus::augment {

// Passing this as the SNR disables mixing; the signal is returned as is.
inline constexpr double kNoMixSnr = std::numeric_limits<double>::infinity();

struct AugmentPolicy {
  double snr_mean = 50.0;   // dB
  double snr_std = 15.0;    // dB
  double amp_mean = -20.0;  // dBFS RMS
  double amp_std = 5.0;     // dB
  // SNR draws below the floor are redrawn.
  double snr_floor = 0.0;
  std::string noise_bank;  // directory of mono 16-bit WAV files
  bool mix_enabled = true;
  std::uint64_t seed = 0;

  void Validate() const;
};

double MeanPower(std::span<const float> x);
// 20*log10(RMS) relative to full scale 1.0.
double RmsDbfs(std::span<const float> x);
double PeakAbs(std::span<const float> x);

struct MixResult {
  std::vector<float> samples;
  double noise_scale = 0.0;
};

// Loops or truncates |noise| to the signal length and scales it so that
// 10*log10(P_signal / P_noise_scaled) == snr_db, P = mean square.
// Throws ZeroSignal / ZeroNoise on silent inputs.
MixResult MixAtSnr(std::span<const float> signal, std::span<const float> noise, double snr_db);

struct LevelResult {
  std::vector<float> samples;
  double gain = 1.0;
  // Target gain would have clipped; the peak was normalized to -0.1 dBFS.
  bool peak_clamped = false;
};

LevelResult SetLevel(std::span<const float> signal, double target_dbfs);

inline constexpr double kPeakCeilingDbfs = -0.1;

struct AugmentDraw {
  double snr = 0.0;
  double level = 0.0;
  std::size_t noise_index = 0;
};

// Parameters for item |index|, from the stream DeriveSeed(seed, index).
AugmentDraw DrawParams(const AugmentPolicy& policy, std::size_t noise_count,
                       std::uint64_t index);

struct AugmentLogEntry {
  std::string utterance_id;
  std::string noise_id;
  double snr = 0.0;
  double level = 0.0;
  bool peak_clamped = false;
  std::size_t clipped_samples = 0;
};

struct AugmentSkip {
  std::string utterance_id;
  std::string reason;
};

struct AugmentLog {
  std::vector<AugmentLogEntry> entries;
  std::vector<AugmentSkip> skips;
};

nlohmann::json ToJson(const AugmentLogEntry& e);
std::string ToJsonl(const AugmentLog& log);

struct AugmentPaths {
  std::string audio_root;  // resolves input utterance audio paths
  std::string out_root;    // augmented audio is written under this root
};

// Levels each clean utterance to a drawn RMS target, then mixes a noise
// file from the bank at a drawn SNR. Failing items are skipped and logged;
// |entries| + |skips| always equals the input size.
std::pair<corpus::Manifest, AugmentLog> AugmentCorpus(const corpus::Manifest& manifest,
                                                      const AugmentPolicy& policy,
                                                      const AugmentPaths& paths);

}  // namespace synthcorpus::augment
