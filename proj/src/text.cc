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

#include "synthcorpus/text.h"

namespace synthcorpus::text {

std::u32string DecodeUtf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      extra = 1;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      extra = 2;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      extra = 3;
    } else {
      out.push_back(U'�');
      ++i;
      continue;
    }
    if (i + extra >= s.size()) {
      out.push_back(U'�');
      break;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

void AppendUtf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string EncodeUtf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) AppendUtf8(out, cp);
  return out;
}

namespace {

bool InRange(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

// Upper-case letter at an even (or odd) offset followed by its lower form.
char32_t PairFold(char32_t cp, bool upper_is_even) {
  const bool even = (cp % 2) == 0;
  return even == upper_is_even ? cp + 1 : cp;
}

}  // namespace

char32_t FoldCase(char32_t cp) {
  if (cp < 0x80) return (cp >= U'A' && cp <= U'Z') ? cp + 0x20 : cp;
  if (InRange(cp, 0xC0, 0xDE) && cp != 0xD7) return cp + 0x20;
  if (cp < 0x100) return cp;

  // Latin Extended-A
  if (cp == 0x130) return U'i';
  if (InRange(cp, 0x100, 0x12F) || InRange(cp, 0x132, 0x137) ||
      InRange(cp, 0x14A, 0x177)) {
    return PairFold(cp, true);
  }
  if (InRange(cp, 0x139, 0x148) || InRange(cp, 0x179, 0x17E)) {
    return PairFold(cp, false);
  }
  if (cp == 0x178) return 0xFF;

  // Latin Extended-B
  switch (cp) {
    case 0x181: return 0x253;  // Ɓ
    case 0x186: return 0x254;  // Ɔ
    case 0x187: return 0x188;
    case 0x189: return 0x256;
    case 0x18A: return 0x257;  // Ɗ
    case 0x18B: return 0x18C;
    case 0x18E: return 0x1DD;
    case 0x18F: return 0x259;  // Ə
    case 0x190: return 0x25B;  // Ɛ
    case 0x191: return 0x192;
    case 0x193: return 0x260;
    case 0x194: return 0x263;
    case 0x196: return 0x269;
    case 0x197: return 0x268;
    case 0x198: return 0x199;  // Ƙ
    case 0x19C: return 0x26F;
    case 0x19D: return 0x272;  // Ɲ
    case 0x19F: return 0x275;
    case 0x1AC: return 0x1AD;
    case 0x1AF: return 0x1B0;
    case 0x1B3: return 0x1B4;  // Ƴ
    case 0x1B5: return 0x1B6;
    case 0x1B7: return 0x292;
    default: break;
  }
  if (InRange(cp, 0x1A0, 0x1A5)) return PairFold(cp, true);
  if (InRange(cp, 0x1CD, 0x1DC)) return PairFold(cp, false);
  if (InRange(cp, 0x1DE, 0x1EF)) return PairFold(cp, true);

  // Greek
  if (InRange(cp, 0x391, 0x3A9) && cp != 0x3A2) return cp + 0x20;
  if (cp == 0x386) return 0x3AC;
  if (InRange(cp, 0x388, 0x38A)) return cp + 0x25;
  if (cp == 0x38C) return 0x3CC;
  if (InRange(cp, 0x38E, 0x38F)) return cp + 0x3F;

  // Cyrillic
  if (InRange(cp, 0x410, 0x42F)) return cp + 0x20;
  if (InRange(cp, 0x400, 0x40F)) return cp + 0x50;
  if (InRange(cp, 0x460, 0x481) || InRange(cp, 0x48A, 0x4BF)) {
    return PairFold(cp, true);
  }

  // Latin Extended Additional (Vietnamese, Yoruba dot-below letters, ...)
  if (InRange(cp, 0x1E00, 0x1E95) || InRange(cp, 0x1EA0, 0x1EFF)) {
    return PairFold(cp, true);
  }
  return cp;
}

std::string FoldCase(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : DecodeUtf8(s)) AppendUtf8(out, FoldCase(cp));
  return out;
}

bool IsSpace(char32_t cp) {
  switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

std::string Trim(std::string_view s) {
  const std::u32string cps = DecodeUtf8(s);
  std::size_t b = 0;
  std::size_t e = cps.size();
  while (b < e && IsSpace(cps[b])) ++b;
  while (e > b && IsSpace(cps[e - 1])) --e;
  return EncodeUtf8(std::u32string_view(cps).substr(b, e - b));
}

std::string CollapseWhitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char32_t cp : DecodeUtf8(s)) {
    if (IsSpace(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    AppendUtf8(out, cp);
  }
  return out;
}

std::string Canonical(std::string_view s) {
  return FoldCase(CollapseWhitespace(s));
}

std::size_t CodePointCount(std::string_view s) {
  std::size_t n = 0;
  for (char c : s) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::vector<std::string> SplitWords(std::string_view s) {
  std::vector<std::string> words;
  std::string current;
  for (char32_t cp : DecodeUtf8(s)) {
    if (IsSpace(cp)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      AppendUtf8(current, cp);
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

bool IsQuestion(std::string_view s) {
  const std::u32string cps = DecodeUtf8(Trim(s));
  if (cps.empty()) return false;
  return cps.back() == U'?' || cps.back() == 0x061F;
}

}  // namespace synthcorpus::text
