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

#include "synthcorpus/audio_io.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "synthcorpus/error.h"

namespace synthcorpus {
namespace wav {
namespace {

std::uint32_t ReadU32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t ReadU16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutU16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

Audio Decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    Throw(ErrorKind::kInvalidInput, "not a RIFF/WAVE stream");
  }
  Audio audio;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) Throw(ErrorKind::kInvalidInput, "truncated WAV chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) Throw(ErrorKind::kInvalidInput, "short fmt chunk");
      const auto format = ReadU16(bytes.data() + body);
      const auto channels = ReadU16(bytes.data() + body + 2);
      const auto bits = ReadU16(bytes.data() + body + 14);
      if (format != 1 || channels != 1 || bits != 16) {
        Throw(ErrorKind::kInvalidInput, "only 16-bit PCM mono WAV is supported");
      }
      audio.sample_rate = static_cast<int>(ReadU32(bytes.data() + body + 4));
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) Throw(ErrorKind::kInvalidInput, "data chunk before fmt chunk");
      const std::size_t n = size / 2;
      audio.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto raw = static_cast<std::int16_t>(ReadU16(bytes.data() + body + 2 * i));
        audio.samples[i] = static_cast<float>(raw) / 32768.0f;
      }
      return audio;
    }
    pos = body + size + (size & 1);
  }
  Throw(ErrorKind::kInvalidInput, "WAV stream has no data chunk");
}

Audio Decode(std::string_view bytes) {
  return Decode(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::string Encode(const Audio& audio, std::size_t* clipped) {
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out.append("RIFF");
  PutU32(out, 36 + data_bytes);
  out.append("WAVEfmt ");
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(audio.sample_rate));
  PutU32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  out.append("data");
  PutU32(out, data_bytes);
  std::size_t n_clipped = 0;
  for (float s : audio.samples) {
    float v = s;
    if (v > 1.0f || v < -1.0f) {
      ++n_clipped;
      v = std::clamp(v, -1.0f, 1.0f);
    }
    const auto q = static_cast<std::int16_t>(
        std::clamp(std::lround(v * 32768.0f), -32768L, 32767L));
    PutU16(out, static_cast<std::uint16_t>(q));
  }
  if (clipped != nullptr) *clipped = n_clipped;
  return out;
}

Audio Read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorKind::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Decode(ss.str());
}

void Write(const std::string& path, const Audio& audio, std::size_t* clipped) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) Throw(ErrorKind::kIo, "cannot write " + path);
  const std::string bytes = Encode(audio, clipped);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace wav

namespace base64 {
namespace {

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int Value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+' || c == '-') return 62;
  if (c == '/' || c == '_') return 63;
  return -1;
}

}  // namespace

std::string Encode(std::string_view bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                            (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                            static_cast<unsigned char>(bytes[i + 2]);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back(kAlphabet[v & 63]);
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
    if (rest == 2) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(rest == 2 ? kAlphabet[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::string Decode(std::string_view text) {
  std::string out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r' || c == ' ') continue;
    const int v = Value(c);
    if (v < 0) Throw(ErrorKind::kInvalidInput, "malformed base64");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

}  // namespace base64
}  // namespace synthcorpus
