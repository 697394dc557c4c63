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

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace qtomo::optim {

struct NelderMeadOptions {
  double initial_step = 0.05;
  double ftol = 1e-10;  // stop when the simplex cost spread is below this
  double xtol = 1e-10;  // ... or when every vertex is within this of the best
  long max_evaluations = 200000;
  int max_restarts = 10;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  long evaluations = 0;
  int restarts = 0;
  bool converged = false;
};

/// Unconstrained Nelder-Mead with dimension-adaptive coefficients
/// (Gao & Han). After convergence the search restarts from the best vertex
/// with a fresh simplex until a restart no longer improves the value by more
/// than ftol.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    Eigen::VectorXd x0, const NelderMeadOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  NelderMeadResult result;
  result.x = x0;
  result.value = f(x0);
  result.evaluations = 1;
  if (n == 0) {
    result.converged = true;
    return result;
  }
  const double dn = static_cast<double>(n);
  const double alpha = 1.0;
  const double beta = 1.0 + 2.0 / dn;
  const double gamma = 0.75 - 1.0 / (2.0 * dn);
  const double delta = 1.0 - 1.0 / dn;

  auto eval = [&](const Eigen::VectorXd& x) {
    ++result.evaluations;
    return f(x);
  };

  double step = opt.initial_step;
  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    result.restarts = restart;
    const double start_value = result.value;
    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), result.x);
    std::vector<double> vals(static_cast<std::size_t>(n + 1), result.value);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& p = pts[static_cast<std::size_t>(i + 1)];
      p(i) += p(i) != 0.0 ? step * std::max(1.0, std::abs(p(i))) : step;
      vals[static_cast<std::size_t>(i + 1)] = eval(p);
    }
    std::vector<std::size_t> order(pts.size());
    bool converged = false;
    while (result.evaluations < opt.max_evaluations) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
      const std::size_t best = order.front();
      const std::size_t worst = order.back();
      const std::size_t second = order[order.size() - 2];

      double spread = vals[worst] - vals[best];
      double size = 0.0;
      for (const auto& p : pts) size = std::max(size, (p - pts[best]).cwiseAbs().maxCoeff());
      if (spread <= opt.ftol || size <= opt.xtol) {
        converged = true;
        break;
      }

      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (std::size_t k = 0; k + 1 < order.size(); ++k) centroid += pts[order[k]];
      centroid /= dn;

      const Eigen::VectorXd xr = centroid + alpha * (centroid - pts[worst]);
      const double fr = eval(xr);
      if (fr < vals[best]) {
        const Eigen::VectorXd xe = centroid + beta * (xr - centroid);
        const double fe = eval(xe);
        if (fe < fr) {
          pts[worst] = xe;
          vals[worst] = fe;
        } else {
          pts[worst] = xr;
          vals[worst] = fr;
        }
        continue;
      }
      if (fr < vals[second]) {
        pts[worst] = xr;
        vals[worst] = fr;
        continue;
      }
      const bool outside = fr < vals[worst];
      const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + gamma * (xr - centroid))
                                         : Eigen::VectorXd(centroid - gamma * (centroid - pts[worst]));
      const double fc = eval(xc);
      if (fc < (outside ? fr : vals[worst])) {
        pts[worst] = xc;
        vals[worst] = fc;
        continue;
      }
      for (std::size_t k = 1; k < order.size(); ++k) {
        auto& p = pts[order[k]];
        p = pts[best] + delta * (p - pts[best]);
        vals[order[k]] = eval(p);
      }
    }
    const auto best_it = std::min_element(vals.begin(), vals.end());
    const auto best_idx = static_cast<std::size_t>(best_it - vals.begin());
    if (*best_it < result.value) {
      result.value = *best_it;
      result.x = pts[best_idx];
    }
    result.converged = converged;
    if (!converged) break;
    if (start_value - result.value <= opt.ftol && restart > 0) break;
    step = std::max(step * 0.5, 1e-6);
  }
  return result;
}

}  // namespace qtomo::optim
