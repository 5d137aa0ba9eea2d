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

#include "cpcsim/alignment/agreement.hpp"

#include <map>
#include <utility>

#include "cpcsim/error.hpp"

namespace cpcsim {
namespace {

double choose2(double n) { return n * (n - 1.0) / 2.0; }

void check_lengths(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw InvalidArgument("assignments differ in length");
  if (a.empty()) throw InvalidArgument("assignments are empty");
}

}  // namespace

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  check_lengths(a, b);
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> rows;
  std::map<std::size_t, double> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double sum_joint = 0.0;
  for (const auto& [key, count] : joint) sum_joint += choose2(count);
  double sum_rows = 0.0;
  for (const auto& [key, count] : rows) sum_rows += choose2(count);
  double sum_cols = 0.0;
  for (const auto& [key, count] : cols) sum_cols += choose2(count);

  const double total = choose2(static_cast<double>(a.size()));
  const double expected = total > 0.0 ? sum_rows * sum_cols / total : 0.0;
  const double maximum = 0.5 * (sum_rows + sum_cols);
  const double denom = maximum - expected;
  if (denom == 0.0) return sum_joint == maximum ? 1.0 : 0.0;
  return (sum_joint - expected) / denom;
}

double cohen_kappa(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  check_lengths(a, b);
  const double n = static_cast<double>(a.size());
  std::map<std::size_t, double> freq_a;
  std::map<std::size_t, double> freq_b;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    agree += a[i] == b[i] ? 1.0 : 0.0;
    freq_a[a[i]] += 1.0;
    freq_b[b[i]] += 1.0;
  }
  const double observed = agree / n;
  double chance = 0.0;
  for (const auto& [label, count] : freq_a) {
    const auto it = freq_b.find(label);
    if (it != freq_b.end()) chance += (count / n) * (it->second / n);
  }
  if (observed == 1.0) return 1.0;
  if (chance == 1.0) return 0.0;
  return (observed - chance) / (1.0 - chance);
}

Agreement categorization_agreement(std::span<const std::size_t> a,
                                   std::span<const std::size_t> b) {
  return {adjusted_rand_index(a, b), cohen_kappa(a, b)};
}

Agreement categorization_agreement(const SignAssignment& a, const SignAssignment& b) {
  return categorization_agreement(a.signs, b.signs);
}

}  // namespace cpcsim
