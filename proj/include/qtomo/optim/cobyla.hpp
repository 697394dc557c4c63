// Copyright 2026 The qtomo Authors
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

// Derivative-free constrained minimization by linear approximation, in the
// manner of Powell's COBYLA:
//
//   * the objective and every constraint are modelled linearly by
//     interpolation on a simplex of n + 1 evaluated points;
//   * each iteration solves a trust-region LP, first minimizing the
//     linearized worst violation, then the linearized objective subject to
//     not exceeding that violation;
//   * progress is judged with the merit f + mu * max(0, -min_k c_k), mu grown
//     whenever the model trades objective for feasibility;
//   * the radius rho shrinks when steps stop paying off, down to rho_end.
//
// Differences from Powell's code: the trust region is a box (so the
// subproblem is an LP, solved by optim::solve_lp) and a degenerate simplex is
// rebuilt along the coordinate axes rather than repaired one vertex at a time.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "qtomo/optim/lp.hpp"

namespace qtomo::optim {

struct ConstrainedProblem {
  std::function<double(const Eigen::VectorXd&)> objective;
  /// Constraint values; a point is feasible when every entry is >= 0.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> constraints;
};

struct CobylaOptions {
  double rho_begin = 0.1;
  double rho_end = 1e-9;
  long max_evaluations = 100000;
  double feasibility_tol = 1e-12;
};

struct CobylaResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double max_violation = 0.0;
  long evaluations = 0;
  bool converged = false;
};

namespace detail {

struct SimplexPoint {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd c;
  double violation = 0.0;
};

/// Box trust-region LP in scaled variables u = s / rho in [-1, 1]^n.
/// Returns the step s and the smallest achievable linearized violation.
inline std::pair<Eigen::VectorXd, double> trust_region_step(const Eigen::VectorXd& g, const Eigen::MatrixXd& grads,
                                                            const Eigen::VectorXd& c0, double violation0,
                                                            double rho) {
  const Eigen::Index n = g.size();
  const Eigen::Index m = c0.size();
  // Work with w = u + 1 in [0, 2]. Constraint k: c0_k + rho G_k (w - 1) + t >= 0.
  const Eigen::MatrixXd coef = rho * grads.transpose();  // m x n
  const Eigen::VectorXd shifted = c0 - coef * Eigen::VectorXd::Ones(n);

  auto row_scale = [&](Eigen::Index k, double extra) {
    const double s = std::max({coef.row(k).cwiseAbs().maxCoeff(), std::abs(shifted(k) + extra), 1e-300});
    return 1.0 / s;
  };

  double t_star = 0.0;
  if (violation0 > 0.0) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + n, n + 1);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m + n);
    for (Eigen::Index k = 0; k < m; ++k) {
      const double sc = row_scale(k, 0.0);
      a.block(k, 0, 1, n) = -sc * coef.row(k);
      a(k, n) = -sc;
      b(k) = sc * shifted(k);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      a(m + i, i) = 1.0;
      b(m + i) = 2.0;
    }
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(n + 1);
    cost(n) = 1.0;
    const LpResult r1 = solve_lp(cost, a, b);
    t_star = r1.status == LpStatus::optimal ? r1.x(n) : violation0;
  }

  const double gnorm = g.cwiseAbs().maxCoeff();
  if (!(gnorm > 0.0)) return {Eigen::VectorXd::Zero(n), t_star};
  const double slack = t_star * (1.0 + 1e-9) + 1e-15 * (1.0 + c0.cwiseAbs().maxCoeff());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m + n);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double sc = row_scale(k, slack);
    a.row(k) = -sc * coef.row(k);
    b(k) = sc * (shifted(k) + slack);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    a(m + i, i) = 1.0;
    b(m + i) = 2.0;
  }
  const LpResult r2 = solve_lp(g / gnorm, a, b);
  if (r2.status != LpStatus::optimal) return {Eigen::VectorXd::Zero(n), t_star};
  return {rho * (r2.x.array() - 1.0).matrix(), t_star};
}

}  // namespace detail

inline CobylaResult minimize_cobyla(const ConstrainedProblem& problem, const Eigen::VectorXd& x0,
                                    const CobylaOptions& opt = {}) {
  using detail::SimplexPoint;
  const Eigen::Index n = x0.size();
  CobylaResult result;

  auto evaluate = [&](const Eigen::VectorXd& x) {
    SimplexPoint p;
    p.x = x;
    p.f = problem.objective(x);
    p.c = problem.constraints(x);
    p.violation = p.c.size() > 0 ? std::max(0.0, -p.c.minCoeff()) : 0.0;
    ++result.evaluations;
    return p;
  };

  SimplexPoint best_feasible;
  bool have_feasible = false;
  auto note = [&](const SimplexPoint& p) {
    if (p.violation <= opt.feasibility_tol && (!have_feasible || p.f < best_feasible.f)) {
      best_feasible = p;
      have_feasible = true;
    }
  };

  double mu = 0.0;
  auto merit = [&](const SimplexPoint& p) { return p.f + mu * p.violation; };
  auto better = [&](const SimplexPoint& a, const SimplexPoint& b) {
    const double ma = merit(a);
    const double mb = merit(b);
    if (ma != mb) return ma < mb;
    return a.violation < b.violation;
  };

  SimplexPoint start = evaluate(x0);
  note(start);
  std::vector<SimplexPoint> simplex;
  double rho = opt.rho_begin;

  auto rebuild = [&](const SimplexPoint& center) {
    simplex.clear();
    simplex.push_back(center);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd x = center.x;
      x(i) += rho;
      simplex.push_back(evaluate(x));
      note(simplex.back());
    }
  };

  auto finish = [&](bool converged) {
    const SimplexPoint& pick = have_feasible ? best_feasible : simplex.front();
    result.x = pick.x;
    result.value = pick.f;
    result.max_violation = pick.violation;
    result.converged = converged;
    return result;
  };

  if (n == 0) {
    simplex.push_back(start);
    return finish(true);
  }
  rebuild(start);

  // Returns false when rho has reached rho_end.
  auto shrink = [&]() {
    if (rho <= opt.rho_end) return false;
    rho = std::max(0.5 * rho, opt.rho_end);
    if (rho < 1.5 * opt.rho_end) rho = opt.rho_end;
    const auto it = std::min_element(simplex.begin(), simplex.end(), better);
    const SimplexPoint center = *it;
    rebuild(center);
    return true;
  };

  while (result.evaluations < opt.max_evaluations) {
    auto best_it = std::min_element(simplex.begin(), simplex.end(), better);
    std::iter_swap(simplex.begin(), best_it);
    const SimplexPoint& x0p = simplex.front();

    Eigen::MatrixXd edges(n, n);
    for (Eigen::Index i = 0; i < n; ++i) edges.col(i) = simplex[static_cast<std::size_t>(i + 1)].x - x0p.x;
    Eigen::FullPivLU<Eigen::MatrixXd> lu_t(edges.transpose());
    if (!lu_t.isInvertible() || lu_t.rcond() < 1e-10) {
      rebuild(x0p);
      continue;
    }
    const auto m = x0p.c.size();
    Eigen::VectorXd df(n);
    Eigen::MatrixXd dc(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& p = simplex[static_cast<std::size_t>(i + 1)];
      df(i) = p.f - x0p.f;
      dc.row(i) = (p.c - x0p.c).transpose();
    }
    const Eigen::VectorXd g = lu_t.solve(df);
    const Eigen::MatrixXd grads = m > 0 ? Eigen::MatrixXd(lu_t.solve(dc)) : Eigen::MatrixXd(n, 0);

    auto [step, t_star] = detail::trust_region_step(g, grads, x0p.c, x0p.violation, rho);
    const double pred_f = -g.dot(step);
    const double pred_v = std::max(0.0, x0p.violation - t_star);
    if (pred_v > 0.0 && pred_f < 0.0) mu = std::max(mu, 1.5 * (-pred_f) / pred_v);
    const double predicted = pred_f + mu * pred_v;

    const double geometry_limit = 2.0 * rho;
    bool geometry_ok = lu_t.rcond() > 1e-4;
    for (std::size_t i = 1; i < simplex.size() && geometry_ok; ++i) {
      if ((simplex[i].x - x0p.x).cwiseAbs().maxCoeff() > geometry_limit) geometry_ok = false;
    }

    if (step.cwiseAbs().maxCoeff() < 0.5 * rho || !(predicted > 0.0)) {
      if (!geometry_ok) {
        rebuild(x0p);
        continue;
      }
      if (!shrink()) return finish(true);
      continue;
    }

    SimplexPoint trial = evaluate(x0p.x + step);
    note(trial);
    const double actual = merit(x0p) - merit(trial);
    const double ratio = actual / predicted;

    // Vertex to drop: keep the volume of the simplex large and prefer
    // discarding far-away points. Vertex 0 may only go if the trial beats it.
    Eigen::FullPivLU<Eigen::MatrixXd> lu(edges);
    const Eigen::VectorXd sigma = lu.solve(trial.x - x0p.x);
    const bool trial_better = better(trial, x0p);
    const Eigen::VectorXd& anchor = trial_better ? trial.x : x0p.x;
    std::size_t drop = 1;
    double best_score = -1.0;
    for (std::size_t j = 0; j < simplex.size(); ++j) {
      if (j == 0 && !trial_better) continue;
      const double volume = j == 0 ? std::abs(1.0 - sigma.sum()) : std::abs(sigma(static_cast<Eigen::Index>(j - 1)));
      const double dist = (simplex[j].x - anchor).cwiseAbs().maxCoeff() / rho;
      const double score = volume * std::max(1.0, dist * dist);
      if (score > best_score) {
        best_score = score;
        drop = j;
      }
    }
    simplex[drop] = std::move(trial);

    if (ratio < 0.1) {
      if (!geometry_ok) {
        const auto it = std::min_element(simplex.begin(), simplex.end(), better);
        const SimplexPoint center = *it;
        rebuild(center);
      } else if (!shrink()) {
        return finish(true);
      }
    }
  }
  return finish(false);
}

}  // namespace qtomo::optim
