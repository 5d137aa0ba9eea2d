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

#include "cpcsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cpcsim/alignment/rdm.hpp"
#include "cpcsim/error.hpp"

namespace cpcsim {
namespace {

// counts[u] = number of rank arrangements giving U = u, for sizes (n1, n2).
std::vector<double> u_null_counts(std::size_t n1, std::size_t n2) {
  // table[a][b] holds the distribution for sizes (a, b); built row by row.
  const std::size_t max_u = n1 * n2;
  std::vector<std::vector<std::vector<double>>> table(
      n1 + 1, std::vector<std::vector<double>>(n2 + 1));
  for (std::size_t a = 0; a <= n1; ++a) {
    for (std::size_t b = 0; b <= n2; ++b) {
      auto& dist = table[a][b];
      dist.assign(a * b + 1, 0.0);
      if (a == 0 || b == 0) {
        dist[0] = 1.0;
        continue;
      }
      // Largest element belongs to sample 1 (adds b to U) or to sample 2.
      const auto& from_first = table[a - 1][b];
      const auto& from_second = table[a][b - 1];
      for (std::size_t u = 0; u < from_first.size(); ++u) dist[u + b] += from_first[u];
      for (std::size_t u = 0; u < from_second.size(); ++u) dist[u] += from_second[u];
    }
  }
  std::vector<double> out = table[n1][n2];
  out.resize(max_u + 1, 0.0);
  return out;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

double mean(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                                 MannWhitneyMethod method) {
  if (x.empty() || y.empty()) throw InvalidArgument("Mann-Whitney needs two non-empty samples");
  const std::size_t n1 = x.size();
  const std::size_t n2 = y.size();
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  for (double v : pooled) {
    if (!std::isfinite(v)) throw InvalidArgument("Mann-Whitney needs finite values");
  }
  const std::vector<double> ranks = average_ranks(pooled);
  const double rank_sum = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1), 0.0);
  const double dn1 = static_cast<double>(n1);
  const double dn2 = static_cast<double>(n2);
  MannWhitneyResult result;
  result.u_statistic = rank_sum - dn1 * (dn1 + 1.0) / 2.0;
  const double u_max = std::max(result.u_statistic, dn1 * dn2 - result.u_statistic);

  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const bool has_ties = tie_term > 0.0;

  bool use_exact = method == MannWhitneyMethod::exact;
  if (method == MannWhitneyMethod::automatic) use_exact = !has_ties && n1 + n2 <= 40;
  if (use_exact && has_ties) throw InvalidArgument("exact Mann-Whitney requires no ties");

  if (use_exact) {
    const std::vector<double> counts = u_null_counts(n1, n2);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    double tail = 0.0;
    for (std::size_t u = static_cast<std::size_t>(std::llround(u_max)); u < counts.size(); ++u) {
      tail += counts[u];
    }
    result.p_value = std::min(1.0, 2.0 * tail / total);
    result.exact = true;
    return result;
  }

  const double n = dn1 + dn2;
  const double variance = dn1 * dn2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(variance > 0.0)) {
    result.p_value = 1.0;
    return result;
  }
  const double z = (u_max - dn1 * dn2 / 2.0 - 0.5) / std::sqrt(variance);
  result.p_value = std::min(1.0, 2.0 * normal_sf(z));
  return result;
}

}  // namespace cpcsim
