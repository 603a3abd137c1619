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

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace synthcorpus {

enum class ErrorKind {
  kInvalidInput,
  kValidation,
  kConfig,
  kRetryExhausted,
  kProviderRejected,
  kParseFailure,
  kSchemaFailure,
  kEmptyGroup,
  kDegenerateDesign,
  kIncompleteMatrix,
  kInsufficientData,
  kZeroNoise,
  kZeroSignal,
  kUnsplittableGroup,
  kEmptyReference,
  kIo,
  kNotFound,
};

std::string_view ErrorKindName(ErrorKind kind);

// True for errors caused by bad user input or configuration (CLI exit 2);
// everything else is a runtime failure (CLI exit 1).
bool IsValidationKind(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Carries the offending field names, e.g. {"readability"}.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> fields);

  const std::vector<std::string>& fields() const noexcept { return fields_; }

 private:
  std::vector<std::string> fields_;
};

// Raw response body is retained so callers can log or persist it.
class ParseFailure : public Error {
 public:
  ParseFailure(const std::string& message, std::string raw);

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class InsufficientData : public Error {
 public:
  InsufficientData(const std::string& message, double deficit);

  double deficit() const noexcept { return deficit_; }

 private:
  double deficit_;
};

class ProviderRejected : public Error {
 public:
  ProviderRejected(int status, const std::string& body);

  int status() const noexcept { return status_; }

 private:
  int status_;
};

[[noreturn]] void Throw(ErrorKind kind, const std::string& message);

}  // namespace synthcorpus
