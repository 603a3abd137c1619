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

#include "synthcorpus/csv.h"

#include <fstream>
#include <sstream>

#include "synthcorpus/error.h"

namespace synthcorpus::csv {

std::vector<Row> Parse(std::string_view data) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  // Skip a UTF-8 byte order mark if present.
  if (data.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    rows.push_back(std::move(row));
    row.clear();
    field_started = false;
  };
  for (; i < data.size(); ++i) {
    const char c = data[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) Throw(ErrorKind::kParseFailure, "unterminated quoted CSV field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

std::string EscapeField(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void WriteRow(std::ostream& os, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i > 0) os << ',';
    os << EscapeField(row[i]);
  }
  os << '\n';
}

Table Table::FromString(std::string_view data) {
  Table t;
  auto rows = Parse(data);
  if (rows.empty()) return t;
  t.header_ = std::move(rows.front());
  for (auto& name : t.header_) {
    while (!name.empty() && (name.back() == ' ' || name.back() == '\t')) name.pop_back();
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    // Blank trailing lines parse as a single empty field.
    if (rows[i].size() == 1 && rows[i][0].empty()) continue;
    rows[i].resize(t.header_.size());
    t.rows_.push_back(std::move(rows[i]));
  }
  return t;
}

Table Table::FromFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorKind::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return FromString(ss.str());
}

std::optional<std::size_t> Table::Column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::RequireColumn(std::string_view name) const {
  auto col = Column(name);
  if (!col) throw ValidationError({std::string(name)});
  return *col;
}

}  // namespace synthcorpus::csv
