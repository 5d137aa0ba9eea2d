// Copyright 2026 The cpcsim Authors
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

#ifndef CPCSIM_CSV_HPP_
#define CPCSIM_CSV_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cpcsim::csv {

// Shortest representation that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);
std::size_t parse_index(std::string_view text);

std::vector<std::string> split_line(std::string_view line);
std::string join(const std::vector<std::string>& cells);

// Comment lines start with '#'; they are kept separately from data rows.
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read(const std::filesystem::path& path);
Table parse(std::string_view text);
void write(const std::filesystem::path& path, const Table& table);
std::string to_string(const Table& table);

// Value of "key=value" tokens inside comment lines, or empty.
std::string comment_value(const Table& table, std::string_view key);

}  // namespace cpcsim::csv

#endif  // CPCSIM_CSV_HPP_
