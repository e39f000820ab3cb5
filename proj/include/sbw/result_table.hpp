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
#ifndef SBW_RESULT_TABLE_HPP_
#define SBW_RESULT_TABLE_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sbw {

struct Column {
  std::string name;
  std::string unit;  // may be empty
};

// Numeric table plus free-form metadata, written as CSV and JSON side by
// side. Numbers are printed in shortest round-trip form.
struct ResultTable {
  std::vector<Column> columns;
  std::vector<std::vector<double>> rows;
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t ColumnIndex(std::string_view name) const;
  // Every value of one column, in row order.
  std::vector<double> ColumnValues(std::string_view name) const;
  double At(std::size_t row, std::string_view column) const {
    return rows.at(row).at(ColumnIndex(column));
  }

  void AddRow(std::vector<double> row);

  std::string ToCsv() const;
  // {"columns": [...], "rows": [{name: value}, ...], "metadata": {...}}
  std::string ToJson() const;
};

std::string FormatNumber(double v);
std::string CsvQuote(std::string_view field);

}  // namespace sbw

#endif  // SBW_RESULT_TABLE_HPP_
