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

#include "cpcsim/alignment/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "cpcsim/error.hpp"
#include "cpcsim/parallel.hpp"
#include "cpcsim/rng.hpp"

namespace cpcsim {
namespace {

struct Potentials {
  Eigen::VectorXd f;
  Eigen::VectorXd g;
};

void check_marginal(const Eigen::VectorXd& marginal, Eigen::Index expected, const char* name) {
  if (marginal.size() != expected) {
    throw InvalidArgument(std::string(name) + " marginal has the wrong length");
  }
  if (!marginal.allFinite() || (marginal.array() <= 0.0).any()) {
    throw InvalidArgument(std::string(name) + " marginal must be strictly positive");
  }
  if (std::abs(marginal.sum() - 1.0) > 1e-9) {
    throw InvalidArgument(std::string(name) + " marginal must sum to 1");
  }
}

double xlogx_sum(const Eigen::MatrixXd& m) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double x = m(i, j);
      if (x > 0.0) total += x * std::log(x);
    }
  }
  return total;
}

// Row/column sums of exp((f_i + g_j - C_ij) / eps) and the plan itself.
struct KernelState {
  Eigen::MatrixXd plan;
  Eigen::VectorXd row_sums;
  Eigen::VectorXd col_sums;
  double residual = 0.0;
};

KernelState evaluate_plan(const Eigen::MatrixXd& scaled, const Eigen::VectorXd& f,
                          const Eigen::VectorXd& g, double epsilon, const Eigen::VectorXd& r,
                          const Eigen::VectorXd& c) {
  KernelState k;
  k.plan.resize(scaled.rows(), scaled.cols());
  for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
    for (Eigen::Index i = 0; i < scaled.rows(); ++i) {
      k.plan(i, j) = std::exp(scaled(i, j) + (f(i) + g(j)) / epsilon);
    }
  }
  k.row_sums = k.plan.rowwise().sum();
  k.col_sums = k.plan.colwise().sum().transpose();
  k.residual = std::max((k.row_sums - r).cwiseAbs().maxCoeff(),
                        (k.col_sums - c).cwiseAbs().maxCoeff());
  return k;
}

// Value of the concave dual
//   <f, r> + <g, c> - eps * sum_ij exp((f_i + g_j - C_ij) / eps).
double dual_value(const KernelState& state, const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                  double epsilon, const Eigen::VectorXd& r, const Eigen::VectorXd& c) {
  return f.dot(r) + g.dot(c) - epsilon * state.row_sums.sum();
}

double gradient_norm(const KernelState& state, const Eigen::VectorXd& r, const Eigen::VectorXd& c) {
  return std::sqrt((state.row_sums - r).squaredNorm() + (state.col_sums - c).squaredNorm());
}

// One damped Newton step on the dual with the last column potential held
// fixed (the dual is invariant to f + t, g - t). A small ridge keeps the
// system solvable when the plan splits into nearly disconnected blocks.
// Returns false if no step improved the dual or the gradient norm.
bool newton_step(const Eigen::MatrixXd& scaled, Eigen::VectorXd& f, Eigen::VectorXd& g,
                 double epsilon, const Eigen::VectorXd& r, const Eigen::VectorXd& c,
                 KernelState& state) {
  const Eigen::Index n = f.size();
  const Eigen::Index m = g.size();
  const Eigen::Index dim = n + m - 1;
  Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs(dim);
  hessian.topLeftCorner(n, n).diagonal() = state.row_sums;
  hessian.bottomRightCorner(m - 1, m - 1).diagonal() = state.col_sums.head(m - 1);
  hessian.topRightCorner(n, m - 1) = state.plan.leftCols(m - 1);
  hessian.bottomLeftCorner(m - 1, n) = state.plan.leftCols(m - 1).transpose();
  hessian.diagonal().array() += 1e-14;
  rhs.head(n) = epsilon * (r - state.row_sums);
  rhs.tail(m - 1) = epsilon * (c - state.col_sums).head(m - 1);
  const Eigen::VectorXd step = hessian.ldlt().solve(rhs);
  if (!step.allFinite()) return false;

  const double dual = dual_value(state, f, g, epsilon, r, c);
  const double grad = gradient_norm(state, r, c);
  for (double t = 1.0; t > 1e-12; t *= 0.5) {
    Eigen::VectorXd f_next = f + t * step.head(n);
    Eigen::VectorXd g_next = g;
    g_next.head(m - 1) += t * step.tail(m - 1);
    KernelState next = evaluate_plan(scaled, f_next, g_next, epsilon, r, c);
    if (!next.plan.allFinite()) continue;
    if (dual_value(next, f_next, g_next, epsilon, r, c) > dual ||
        gradient_norm(next, r, c) < grad) {
      f = std::move(f_next);
      g = std::move(g_next);
      state = std::move(next);
      return true;
    }
  }
  return false;
}

TransportPlan sinkhorn_impl(const Eigen::MatrixXd& cost, const Eigen::VectorXd& r,
                            const Eigen::VectorXd& c, double epsilon, std::size_t max_iter,
                            double tol, Potentials* warm) {
  const Eigen::Index n = cost.rows();
  const Eigen::Index m = cost.cols();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
  if (warm != nullptr && warm->f.size() == n && warm->g.size() == m) {
    f = warm->f;
    g = warm->g;
  }
  const Eigen::MatrixXd scaled = -cost / epsilon;
  const Eigen::ArrayXd log_r = r.array().log();
  const Eigen::ArrayXd log_c = c.array().log();
  Eigen::ArrayXd row_lse(n);

  // Plain Sinkhorn sweeps; near-sparse optima make these converge
  // sublinearly, so every kNewtonEvery sweeps the dual is finished with
  // Newton steps; if those stall the sweeps resume.
  constexpr std::size_t kNewtonEvery = 100;
  bool converged = false;
  std::size_t iter = 0;
  // Fills row_lse from the current g and returns the row residual.
  const auto update_row_lse = [&] {
    const Eigen::ArrayXd g_scaled = g.array() / epsilon;
    double residual = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double max_v = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < m; ++j) max_v = std::max(max_v, scaled(i, j) + g_scaled(j));
      double sum = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) sum += std::exp(scaled(i, j) + g_scaled(j) - max_v);
      row_lse(i) = max_v + std::log(sum);
      residual = std::max(residual, std::abs(std::exp(f(i) / epsilon + row_lse(i)) - r(i)));
    }
    return residual;
  };
  while (!converged) {
    const double residual = update_row_lse();
    if (iter > 0 && residual <= tol) {
      converged = true;
      break;
    }
    if (m > 1 && iter > 0 && (iter % kNewtonEvery == 0 || iter == max_iter)) {
      KernelState state = evaluate_plan(scaled, f, g, epsilon, r, c);
      for (std::size_t k = 0; k < 50 && state.residual > tol; ++k) {
        if (!newton_step(scaled, f, g, epsilon, r, c, state)) break;
      }
      if (state.residual <= tol) {
        converged = true;
        break;
      }
      update_row_lse();
    }
    if (iter >= max_iter) break;
    f = epsilon * (log_r - row_lse).matrix();
    const Eigen::ArrayXd f_scaled = f.array() / epsilon;
    for (Eigen::Index j = 0; j < m; ++j) {
      double max_v = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) max_v = std::max(max_v, scaled(i, j) + f_scaled(i));
      double sum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) sum += std::exp(scaled(i, j) + f_scaled(i) - max_v);
      g(j) = epsilon * (log_c(j) - (max_v + std::log(sum)));
    }
    ++iter;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "sinkhorn did not converge within " << max_iter << " iterations (epsilon " << epsilon
        << " may be too small for the cost range)";
    throw NumericalError(msg.str());
  }
  TransportPlan out;
  out.plan = evaluate_plan(scaled, f, g, epsilon, r, c).plan;
  out.row_marginal = r;
  out.col_marginal = c;
  if (!out.plan.allFinite()) throw NumericalError("sinkhorn produced a non-finite plan");
  if (warm != nullptr) {
    warm->f = std::move(f);
    warm->g = std::move(g);
  }
  return out;
}

// Feasible vertex coupling filling columns in `col_order`.
Eigen::MatrixXd northwest_corner(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                                 const std::vector<std::size_t>& col_order) {
  const Eigen::Index n = p.size();
  const Eigen::Index m = q.size();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, m);
  Eigen::Index i = 0;
  std::size_t jj = 0;
  double row_left = p(0);
  double col_left = q(static_cast<Eigen::Index>(col_order[0]));
  while (i < n && jj < col_order.size()) {
    const auto j = static_cast<Eigen::Index>(col_order[jj]);
    const double amount = std::min(row_left, col_left);
    t(i, j) += amount;
    row_left -= amount;
    col_left -= amount;
    const bool row_done = row_left <= 1e-15;
    const bool col_done = col_left <= 1e-15;
    if (row_done && ++i < n) row_left = p(i);
    if (col_done && ++jj < col_order.size()) {
      col_left = q(static_cast<Eigen::Index>(col_order[jj]));
    }
    if (!row_done && !col_done) break;
  }
  return t;
}

Eigen::MatrixXd initial_coupling(GwInit init, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                                 std::uint64_t seed) {
  std::vector<std::size_t> order(static_cast<std::size_t>(q.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (init == GwInit::anti_identity) {
    std::reverse(order.begin(), order.end());
  } else if (init == GwInit::random) {
    Rng rng(seed);
    rng.shuffle(std::span(order));
  }
  // Mostly the independent coupling, nudged toward the chosen vertex.
  // Strongly biased starts get trapped in the vertex's basin far more often.
  constexpr double kInitBias = 0.1;
  return kInitBias * northwest_corner(p, q, order) + (1.0 - kInitBias) * (p * q.transpose());
}

// Conditional-gradient descent on the entropic objective at one epsilon,
// starting from `t`. Objective values go to `history` when it is non-null.
struct StageResult {
  double objective = 0.0;
  bool converged = false;
};

StageResult gw_stage(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::VectorXd& p,
                     const Eigen::VectorXd& q, const Eigen::MatrixXd& const_cost, double epsilon,
                     const GwOptions& options, Eigen::MatrixXd& t, std::vector<double>* history) {
  auto energy = [&](const Eigen::MatrixXd& plan, const Eigen::MatrixXd& atb) {
    return const_cost.cwiseProduct(plan).sum() - 2.0 * atb.cwiseProduct(plan).sum() +
           epsilon * xlogx_sum(plan);
  };
  StageResult run;
  Eigen::MatrixXd atb = a * t * b.transpose();
  double current = energy(t, atb);
  if (history != nullptr) history->push_back(current);
  Potentials warm;

  for (std::size_t outer = 0; outer < options.max_outer; ++outer) {
    const Eigen::MatrixXd gradient = 2.0 * (const_cost - 2.0 * atb);
    const Eigen::MatrixXd target =
        sinkhorn_impl(gradient, p, q, epsilon, options.sinkhorn_max_iter, options.sinkhorn_tol,
                      &warm)
            .plan;
    const Eigen::MatrixXd delta = target - t;
    const Eigen::MatrixXd adb = a * delta * b.transpose();
    const double quad_0 = const_cost.cwiseProduct(t).sum() - 2.0 * atb.cwiseProduct(t).sum();
    const double slope = const_cost.cwiseProduct(delta).sum() - 4.0 * atb.cwiseProduct(delta).sum();
    const double curvature = -2.0 * adb.cwiseProduct(delta).sum();
    auto along = [&](double alpha) {
      return quad_0 + slope * alpha + curvature * alpha * alpha +
             epsilon * xlogx_sum(t + alpha * delta);
    };
    const auto [brent_alpha, brent_value] =
        boost::math::tools::brent_find_minima(along, 0.0, 1.0, 40);
    double alpha = brent_alpha;
    double best = brent_value;
    if (const double full = along(1.0); full <= best) {
      alpha = 1.0;
      best = full;
    }
    const double start = along(0.0);
    if (!(best < start) || alpha <= 0.0) {
      run.converged = true;
      break;
    }
    t += alpha * delta;
    atb = a * t * b.transpose();
    const double next = energy(t, atb);
    if (history != nullptr) history->push_back(next);
    const double decrease = current - next;
    current = next;
    if (decrease <= options.outer_tol * std::max(1.0, std::abs(current))) {
      run.converged = true;
      break;
    }
  }
  run.objective = current;
  return run;
}

// Small epsilon gives sharp plans but a rugged landscape, so each run is
// annealed from `start_epsilon` down to `epsilon` by halving; only the last
// stage, at the requested epsilon, is recorded in the history.
GwRun run_gw(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::VectorXd& p,
             const Eigen::VectorXd& q, double epsilon, double start_epsilon, GwInit init,
             std::uint64_t init_seed, const GwOptions& options) {
  const Eigen::MatrixXd const_cost =
      (a.cwiseProduct(a) * p) * Eigen::RowVectorXd::Ones(q.size()) +
      Eigen::VectorXd::Ones(p.size()) * (b.cwiseProduct(b) * q).transpose();
  GwRun run;
  run.init = init;
  run.init_seed = init_seed;
  Eigen::MatrixXd t = initial_coupling(init, p, q, init_seed);
  for (double stage = start_epsilon; stage > 2.0 * epsilon; stage *= 0.5) {
    gw_stage(a, b, p, q, const_cost, stage, options, t, nullptr);
  }
  const StageResult last =
      gw_stage(a, b, p, q, const_cost, epsilon, options, t, &run.objective_history);
  run.objective = last.objective;
  run.converged = last.converged;
  run.plan = TransportPlan{t, p, q};
  run.gw_distance = gw_cost(a, b, t);
  return run;
}

}  // namespace

double TransportPlan::max_marginal_residual() const {
  const double rows = (plan.rowwise().sum() - row_marginal).cwiseAbs().maxCoeff();
  const double cols = (plan.colwise().sum().transpose() - col_marginal).cwiseAbs().maxCoeff();
  return std::max(rows, cols);
}

Eigen::VectorXd uniform_marginal(std::size_t n) {
  return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
}

TransportPlan sinkhorn(const Eigen::MatrixXd& cost, const Eigen::VectorXd& row_marginal,
                       const Eigen::VectorXd& col_marginal, double epsilon, std::size_t max_iter,
                       double tol) {
  if (cost.rows() == 0 || cost.cols() == 0) throw InvalidArgument("empty cost matrix");
  if (!cost.allFinite()) throw InvalidArgument("cost matrix must be finite");
  check_marginal(row_marginal, cost.rows(), "row");
  check_marginal(col_marginal, cost.cols(), "column");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("epsilon must be positive");
  }
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  return sinkhorn_impl(cost, row_marginal, col_marginal, epsilon, max_iter, tol, nullptr);
}

double entropic_ot_objective(const Eigen::MatrixXd& cost, const Eigen::MatrixXd& plan,
                             double epsilon) {
  return cost.cwiseProduct(plan).sum() + epsilon * xlogx_sum(plan);
}

std::string_view to_string(GwInit init) {
  switch (init) {
    case GwInit::identity: return "identity";
    case GwInit::anti_identity: return "anti_identity";
    case GwInit::random: return "random";
  }
  return "identity";
}

namespace {

double mean_entry(const Rdm& a, const Rdm& b) {
  const double total = a.matrix.sum() + b.matrix.sum();
  const double count = static_cast<double>(a.matrix.size() + b.matrix.size());
  return count > 0.0 ? total / count : 0.0;
}

}  // namespace

double default_gw_epsilon(const Rdm& a, const Rdm& b) {
  const double mean = mean_entry(a, b);
  return mean > 0.0 ? 0.0025 * mean * mean : 1.0;
}

double gw_cost(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& plan) {
  const Eigen::VectorXd r = plan.rowwise().sum();
  const Eigen::VectorXd c = plan.colwise().sum().transpose();
  const double self_a = r.dot(a.cwiseProduct(a) * r);
  const double self_b = c.dot(b.cwiseProduct(b) * c);
  const double cross = (a * plan * b.transpose()).cwiseProduct(plan).sum();
  return std::max(0.0, self_a + self_b - 2.0 * cross);
}

GwResult gw_align(const Rdm& a, const Rdm& b, const GwOptions& options) {
  a.validate();
  b.validate();
  if (a.size() == 0 || b.size() == 0) throw InvalidArgument("gw_align needs non-empty RDMs");
  if (options.n_init == 0) throw InvalidArgument("n_init must be positive");
  const Eigen::VectorXd p =
      options.row_marginal.size() > 0 ? options.row_marginal : uniform_marginal(a.size());
  const Eigen::VectorXd q =
      options.col_marginal.size() > 0 ? options.col_marginal : uniform_marginal(b.size());
  check_marginal(p, a.matrix.rows(), "row");
  check_marginal(q, b.matrix.rows(), "column");
  const double epsilon = options.epsilon > 0.0 ? options.epsilon : default_gw_epsilon(a, b);
  const double mean = mean_entry(a, b);
  const double start_epsilon = std::max(epsilon, mean > 0.0 ? 0.02 * mean * mean : 1.0);

  std::vector<GwRun> runs(options.n_init);
  parallel_for(options.n_init, options.n_threads, [&](std::size_t i) {
    const GwInit init = i == 0 ? GwInit::identity
                               : (i == 1 ? GwInit::anti_identity : GwInit::random);
    runs[i] = run_gw(a.matrix, b.matrix, p, q, epsilon, start_epsilon, init,
                     derive_seed(options.seed, i), options);
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const bool lower = runs[i].objective < runs[best].objective;
    const bool tie_lower_seed =
        runs[i].objective == runs[best].objective && runs[i].init_seed < runs[best].init_seed;
    if (lower || tie_lower_seed) best = i;
  }
  GwResult result;
  result.plan = runs[best].plan;
  result.gw_distance = runs[best].gw_distance;
  result.objective = runs[best].objective;
  result.epsilon = epsilon;
  result.n_init = options.n_init;
  result.best_init_index = best;
  result.best_init_seed = runs[best].init_seed;
  result.runs = std::move(runs);
  return result;
}

std::vector<std::size_t> row_argmax(const Eigen::MatrixXd& plan) {
  std::vector<std::size_t> out(static_cast<std::size_t>(plan.rows()));
  for (Eigen::Index i = 0; i < plan.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < plan.cols(); ++j) {
      if (plan(i, j) > plan(i, best)) best = j;
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
  }
  return out;
}

double matching_accuracy(const TransportPlan& plan,
                         std::span<const std::size_t> true_correspondence, std::size_t k) {
  const auto n = static_cast<std::size_t>(plan.plan.rows());
  const auto m = static_cast<std::size_t>(plan.plan.cols());
  if (n != m || n == 0) throw InvalidArgument("matching_accuracy needs a square plan");
  if (true_correspondence.size() != n) {
    throw InvalidArgument("true correspondence must have one entry per row");
  }
  std::vector<bool> seen(n, false);
  for (std::size_t c : true_correspondence) {
    if (c >= n || seen[c]) throw InvalidArgument("true correspondence is not a permutation");
    seen[c] = true;
  }
  if (k == 0 || k > m) throw InvalidArgument("k must be in [1, number of columns]");

  std::size_t hits = 0;
  std::vector<std::size_t> columns(m);
  for (std::size_t i = 0; i < n; ++i) {
    std::iota(columns.begin(), columns.end(), std::size_t{0});
    const auto row = static_cast<Eigen::Index>(i);
    std::partial_sort(columns.begin(), columns.begin() + static_cast<std::ptrdiff_t>(k),
                      columns.end(), [&](std::size_t x, std::size_t y) {
                        const double vx = plan.plan(row, static_cast<Eigen::Index>(x));
                        const double vy = plan.plan(row, static_cast<Eigen::Index>(y));
                        return vx > vy || (vx == vy && x < y);
                      });
    if (std::find(columns.begin(), columns.begin() + static_cast<std::ptrdiff_t>(k),
                  true_correspondence[i]) != columns.begin() + static_cast<std::ptrdiff_t>(k)) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace cpcsim
