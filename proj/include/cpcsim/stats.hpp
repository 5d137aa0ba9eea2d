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

#ifndef CPCSIM_STATS_HPP_
#define CPCSIM_STATS_HPP_

#include <span>

namespace cpcsim {

double mean(std::span<const double> values);
// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double sample_std(std::span<const double> values);

enum class MannWhitneyMethod { automatic, exact, asymptotic };

struct MannWhitneyResult {
  double u_statistic = 0.0;  // U of the first sample
  double p_value = 1.0;      // two-sided
  bool exact = false;
};

// Two-sided Mann-Whitney U test. `automatic` uses the exact null
// distribution when there are no ties and n1 + n2 <= 40, otherwise the
// normal approximation with tie and continuity corrections. A zero null
// variance (every value tied) gives p = 1.
MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                                 MannWhitneyMethod method = MannWhitneyMethod::automatic);

}  // namespace cpcsim

#endif  // CPCSIM_STATS_HPP_
