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

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace synthcorpus::csv {

using Row = std::vector<std::string>;

// RFC 4180: quoted fields may contain commas, quotes ("") and newlines.
std::vector<Row> Parse(std::string_view data);

std::string EscapeField(std::string_view field);
void WriteRow(std::ostream& os, const Row& row);

// Header-addressed view over parsed rows.
class Table {
 public:
  static Table FromString(std::string_view data);
  static Table FromFile(const std::string& path);

  const Row& header() const { return header_; }
  const std::vector<Row>& rows() const { return rows_; }

  std::optional<std::size_t> Column(std::string_view name) const;
  // Throws ValidationError naming the missing column.
  std::size_t RequireColumn(std::string_view name) const;

 private:
  Row header_;
  std::vector<Row> rows_;
};

}  // namespace synthcorpus::csv
