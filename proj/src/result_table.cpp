// Copyright 2026 The SBW Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "sbw/result_table.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace sbw {

std::size_t ResultTable::ColumnIndex(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  throw std::out_of_range("no column named " + std::string(name));
}

std::vector<double> ResultTable::ColumnValues(std::string_view name) const {
  const std::size_t c = ColumnIndex(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(c));
  return out;
}

void ResultTable::AddRow(std::vector<double> row) {
  if (row.size() != columns.size()) {
    throw std::invalid_argument("row width " + std::to_string(row.size()) +
                                " does not match " + std::to_string(columns.size()) +
                                " columns");
  }
  rows.push_back(std::move(row));
}

std::string FormatNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

std::string CsvQuote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string ResultTable::ToCsv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    std::string head = columns[i].name;
    if (!columns[i].unit.empty()) head += " [" + columns[i].unit + "]";
    out += CsvQuote(head);
  }
  out += "\r\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += FormatNumber(r[i]);
    }
    out += "\r\n";
  }
  return out;
}

std::string ResultTable::ToJson() const {
  using nlohmann::json;
  json j;
  j["columns"] = json::array();
  for (const Column& c : columns) j["columns"].push_back({{"name", c.name}, {"unit", c.unit}});
  j["rows"] = json::array();
  for (const auto& r : rows) {
    json obj = json::object();
    for (std::size_t i = 0; i < r.size(); ++i) {
      // JSON has no NaN or infinity.
      if (std::isfinite(r[i])) {
        obj[columns[i].name] = r[i];
      } else {
        obj[columns[i].name] = nullptr;
      }
    }
    j["rows"].push_back(std::move(obj));
  }
  j["metadata"] = metadata;
  return j.dump(1) + "\n";
}

}  // namespace sbw
