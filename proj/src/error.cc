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

#include "synthcorpus/error.h"

#include <fmt/format.h>

namespace synthcorpus {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "InvalidInput";
    case ErrorKind::kValidation: return "ValidationError";
    case ErrorKind::kConfig: return "ConfigError";
    case ErrorKind::kRetryExhausted: return "RetryExhausted";
    case ErrorKind::kProviderRejected: return "ProviderRejected";
    case ErrorKind::kParseFailure: return "ParseFailure";
    case ErrorKind::kSchemaFailure: return "SchemaFailure";
    case ErrorKind::kEmptyGroup: return "EmptyGroup";
    case ErrorKind::kDegenerateDesign: return "DegenerateDesign";
    case ErrorKind::kIncompleteMatrix: return "IncompleteMatrix";
    case ErrorKind::kInsufficientData: return "InsufficientData";
    case ErrorKind::kZeroNoise: return "ZeroNoise";
    case ErrorKind::kZeroSignal: return "ZeroSignal";
    case ErrorKind::kUnsplittableGroup: return "UnsplittableGroup";
    case ErrorKind::kEmptyReference: return "EmptyReference";
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kNotFound: return "NotFound";
  }
  return "Unknown";
}

bool IsValidationKind(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput:
    case ErrorKind::kValidation:
    case ErrorKind::kConfig:
    case ErrorKind::kSchemaFailure:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", ErrorKindName(kind), message)),
      kind_(kind) {}

ValidationError::ValidationError(std::vector<std::string> fields)
    : Error(ErrorKind::kValidation, fmt::format("{}", fmt::join(fields, ","))),
      fields_(std::move(fields)) {}

ParseFailure::ParseFailure(const std::string& message, std::string raw)
    : Error(ErrorKind::kParseFailure, message), raw_(std::move(raw)) {}

InsufficientData::InsufficientData(const std::string& message, double deficit)
    : Error(ErrorKind::kInsufficientData,
            fmt::format("{} (deficit {:.6g})", message, deficit)),
      deficit_(deficit) {}

ProviderRejected::ProviderRejected(int status, const std::string& body)
    : Error(ErrorKind::kProviderRejected,
            fmt::format("HTTP {}: {}", status, body.substr(0, 200))),
      status_(status) {}

void Throw(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace synthcorpus
