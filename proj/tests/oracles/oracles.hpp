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

// Reference implementations used only by tests. They are written from the
// textbook definitions and share no code with the library.

#ifndef CPCSIM_TESTS_ORACLES_HPP_
#define CPCSIM_TESTS_ORACLES_HPP_

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct Niw {
  Eigen::VectorXd mean;
  double kappa = 0.0;
  double nu = 0.0;
  Eigen::MatrixXd psi;
};

// One observation at a time, in the order given.
Niw niw_sequential(const Niw& prior, const Eigen::MatrixXd& rows);
// Closed form through raw second moments.
Niw niw_raw_moments(const Niw& prior, const Eigen::MatrixXd& rows);

// Multivariate Student-t log density from the explicit formula (inverse and
// determinant, no factorization).
double student_t_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& loc,
                        const Eigen::MatrixXd& scale, double dof);

// 1-d NIW posterior predictive density by numerical integration over the
// variance, with the mean integrated analytically.
double niw_predictive_quadrature_1d(double x, double mean, double kappa, double nu,
                                    double psi);

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points, bool cosine);
double pearson(const std::vector<double>& x, const std::vector<double>& y);
double spearman(const std::vector<double>& x, const std::vector<double>& y);
std::vector<double> upper(const Eigen::MatrixXd& m);

double ari_pair_counting(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);
double kappa(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

// sum_{i,j,k,l} (A_ik - B_jl)^2 P_ij P_kl
double gw_cost_quadruple(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                         const Eigen::MatrixXd& plan);

// Plain alternating scaling, no log domain; only for well-conditioned inputs.
Eigen::MatrixXd sinkhorn_plain(const Eigen::MatrixXd& cost, const Eigen::VectorXd& r,
                               const Eigen::VectorXd& c, double eps, int iterations);

}  // namespace oracle

#endif  // CPCSIM_TESTS_ORACLES_HPP_
