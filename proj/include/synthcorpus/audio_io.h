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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace synthcorpus {

// Mono PCM audio with samples in [-1, 1].
struct Audio {
  std::vector<float> samples;
  int sample_rate = 16000;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

namespace wav {

// 16-bit PCM mono RIFF/WAVE. Other formats are rejected with InvalidInput.
Audio Decode(std::span<const std::uint8_t> bytes);
Audio Decode(std::string_view bytes);

// Samples outside [-1, 1] are clamped; the number clamped is returned
// through |clipped| when non-null.
std::string Encode(const Audio& audio, std::size_t* clipped = nullptr);

Audio Read(const std::string& path);
void Write(const std::string& path, const Audio& audio, std::size_t* clipped = nullptr);

}  // namespace wav

namespace base64 {

std::string Encode(std::string_view bytes);
// Throws InvalidInput on malformed input.
std::string Decode(std::string_view text);

}  // namespace base64

}  // namespace synthcorpus
