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

// Small dense linear programs: minimize c.x subject to A x <= b, x >= 0.
// Two-phase tableau simplex with Bland's rule. Sized for trust-region
// subproblems (tens to a few hundred rows), not for general use.

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace qtomo::optim {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Eigen::VectorXd x;
  double value = 0.0;
};

namespace detail {

class Tableau {
 public:
  Tableau(Eigen::Index rows, Eigen::Index cols) : t_(Eigen::MatrixXd::Zero(rows + 1, cols + 1)), basis_(rows) {}

  Eigen::MatrixXd& data() { return t_; }
  std::vector<Eigen::Index>& basis() { return basis_; }
  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index cols() const { return t_.cols() - 1; }
  double rhs(Eigen::Index r) const { return t_(r, cols()); }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i != r && t_(i, c) != 0.0) t_.row(i) -= t_(i, c) * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  /// Minimizes the objective row (last row holds reduced costs, with the
  /// negated objective value in the corner). Columns >= `allowed` never enter.
  LpStatus optimize(Eigen::Index allowed, double eps, long max_pivots) {
    const Eigen::Index obj = rows();
    for (long it = 0; it < max_pivots; ++it) {
      Eigen::Index enter = -1;
      for (Eigen::Index c = 0; c < allowed; ++c) {
        if (t_(obj, c) < -eps) {
          enter = c;
          break;
        }
      }
      if (enter < 0) return LpStatus::optimal;
      Eigen::Index leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < obj; ++r) {
        const double a = t_(r, enter);
        if (a > eps) {
          const double ratio = rhs(r) / a;
          if (ratio < best_ratio - 1e-15 ||
              (std::abs(ratio - best_ratio) <= 1e-15 && leave >= 0 &&
               basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)])) {
            best_ratio = ratio;
            leave = r;
          }
        }
      }
      if (leave < 0) return LpStatus::unbounded;
      pivot(leave, enter);
    }
    return LpStatus::iteration_limit;
  }

 private:
  Eigen::MatrixXd t_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace detail

inline LpResult solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                         double eps = 1e-11) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  std::vector<Eigen::Index> artificial_rows;
  for (Eigen::Index r = 0; r < m; ++r) {
    if (b(r) < 0.0) artificial_rows.push_back(r);
  }
  const auto n_art = static_cast<Eigen::Index>(artificial_rows.size());
  // columns: [x (n) | slack (m) | artificial (n_art) | rhs]
  detail::Tableau tab(m, n + m + n_art);
  auto& t = tab.data();
  const Eigen::Index rhs = n + m + n_art;
  Eigen::Index next_art = n + m;
  for (Eigen::Index r = 0; r < m; ++r) {
    const double sign = b(r) < 0.0 ? -1.0 : 1.0;
    t.block(r, 0, 1, n) = sign * a.row(r);
    t(r, n + r) = sign;
    t(r, rhs) = sign * b(r);
    if (sign < 0.0) {
      t(r, next_art) = 1.0;
      tab.basis()[static_cast<std::size_t>(r)] = next_art++;
    } else {
      tab.basis()[static_cast<std::size_t>(r)] = n + r;
    }
  }

  const long max_pivots = 50 * (m + n + n_art) + 1000;
  LpResult result;
  if (n_art > 0) {
    // phase 1: minimize the sum of artificials
    t.row(m).setZero();
    for (Eigen::Index r : artificial_rows) t.row(m) -= t.row(r);
    for (Eigen::Index k = n + m; k < rhs; ++k) t(m, k) = 0.0;
    const LpStatus s1 = tab.optimize(rhs, eps, max_pivots);
    if (s1 == LpStatus::iteration_limit) {
      result.status = s1;
      return result;
    }
    if (-t(m, rhs) > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff())) {
      result.status = LpStatus::infeasible;
      return result;
    }
    // drive remaining artificials out of the basis where possible
    for (Eigen::Index r = 0; r < m; ++r) {
      if (tab.basis()[static_cast<std::size_t>(r)] >= n + m) {
        for (Eigen::Index c2 = 0; c2 < n + m; ++c2) {
          if (std::abs(t(r, c2)) > 1e-9) {
            tab.pivot(r, c2);
            break;
          }
        }
      }
    }
  }

  // phase 2
  t.row(m).setZero();
  t.block(m, 0, 1, n) = c.transpose();
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index bc = tab.basis()[static_cast<std::size_t>(r)];
    if (bc < n && c(bc) != 0.0) t.row(m) -= c(bc) * t.row(r);
  }
  const LpStatus s2 = tab.optimize(n + m, eps, max_pivots);
  result.status = s2;
  result.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index bc = tab.basis()[static_cast<std::size_t>(r)];
    if (bc < n) result.x(bc) = std::max(0.0, tab.rhs(r));
  }
  result.value = c.dot(result.x);
  return result;
}

}  // namespace qtomo::optim
