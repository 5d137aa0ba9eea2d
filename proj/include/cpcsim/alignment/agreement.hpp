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

#ifndef CPCSIM_ALIGNMENT_AGREEMENT_HPP_
#define CPCSIM_ALIGNMENT_AGREEMENT_HPP_

#include <span>

#include "cpcsim/agent.hpp"

namespace cpcsim {

struct Agreement {
  double ari = 0.0;    // adjusted Rand index, invariant to relabeling
  double kappa = 0.0;  // Cohen's kappa on the raw labels
};

// Both degenerate cases (a single cluster or all singletons on both sides)
// have a zero ARI denominator; they score 1 when the partitions coincide
// and 0 otherwise.
double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

// 1 when the labelings are identical, 0 when chance agreement is already 1
// but the labelings differ.
double cohen_kappa(std::span<const std::size_t> a, std::span<const std::size_t> b);

Agreement categorization_agreement(std::span<const std::size_t> a,
                                   std::span<const std::size_t> b);
Agreement categorization_agreement(const SignAssignment& a, const SignAssignment& b);

}  // namespace cpcsim

#endif  // CPCSIM_ALIGNMENT_AGREEMENT_HPP_
