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

// Re-deriving the EO weighting curve.
//
// For a non-physical spectrum (v_i, |v_i>) the eigenvalue displacements
// d_i = lambda_i - v_i are chosen to minimize
//
//   C(d) = sum_j [ sum_{i <= n_+} d_i |<v_i|m_j>|^2 + c0_j ]^2,
//   c0_j = -sum_{i > n_+} v_i |<v_i|m_j>|^2,
//
// with d_i = -v_i on the negative block, the trace fixed by eliminating
// d_{n_+}, and d_i >= -v_i. Optimized displacements from many random states
// are rescaled (index to [0, 1], distance by 2^n / sum_{i > n_+} |d_i|),
// binned, and fitted with an odd power series about x = 1.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qtomo/correction.hpp"
#include "qtomo/density.hpp"
#include "qtomo/fit_curve.hpp"
#include "qtomo/measurement.hpp"
#include "qtomo/optim/cobyla.hpp"

namespace qtomo {

/// Quadratic cost of eigenvalue displacements for one spectrum and projector
/// set, in the reduced form with the negative block folded into c0.
class DistanceProblem {
 public:
  DistanceProblem(const Spectrum& s, const ProjectorSet& ps) : values_(s.eigenvalues) {
    if (s.size() != ps.dim()) throw DomainError("distance problem: dimension mismatch");
    n_plus_ = s.positive_count();
    if (n_plus_ == 0) throw DegenerateInput("distance problem: no positive eigenvalue");
    const Eigen::MatrixXd overlaps = (ps.ket_matrix().adjoint() * s.eigenvectors).cwiseAbs2();
    weights_ = overlaps.leftCols(n_plus_);
    offset_ = RealVector::Zero(overlaps.rows());
    negative_sum_ = 0.0;
    for (Eigen::Index i = n_plus_; i < s.size(); ++i) {
      offset_ -= values_(i) * overlaps.col(i);
      negative_sum_ += values_(i);
    }
  }

  int positive_count() const noexcept { return n_plus_; }
  Eigen::Index free_count() const noexcept { return n_plus_ - 1; }
  double negative_sum() const noexcept { return negative_sum_; }
  const RealVector& eigenvalues() const noexcept { return values_; }

  /// Full displacement vector (length 2^n) from the free variables.
  RealVector expand(const RealVector& free) const {
    RealVector d(values_.size());
    d.head(free.size()) = free;
    d(n_plus_ - 1) = negative_sum_ - free.sum();
    for (Eigen::Index i = n_plus_; i < values_.size(); ++i) d(i) = -values_(i);
    return d;
  }

  /// C for the first n_+ displacements.
  double cost(const RealVector& positive_block) const {
    return (weights_ * positive_block + offset_).squaredNorm();
  }

  double cost_of_free(const RealVector& free) const {
    RealVector block(n_plus_);
    block.head(free.size()) = free;
    block(n_plus_ - 1) = negative_sum_ - free.sum();
    return cost(block);
  }

  /// lambda_i = v_i + d_i >= 0 for i <= n_+, as a vector of n_+ values.
  RealVector constraints_of_free(const RealVector& free) const {
    RealVector c(n_plus_);
    c.head(free.size()) = values_.head(free.size()) + free;
    c(n_plus_ - 1) = values_(n_plus_ - 1) + negative_sum_ - free.sum();
    return c;
  }

 private:
  RealVector values_;
  int n_plus_ = 0;
  Eigen::MatrixXd weights_;
  RealVector offset_;
  double negative_sum_ = 0.0;
};

struct DistanceOptions {
  /// Radii relative to |sum of negative eigenvalues|.
  double rho_begin = 0.25;
  double rho_end = 1e-7;
  long max_evaluations = 200000;
};

struct DistanceResult {
  RealVector distances;  // length 2^n
  int positive_count = 0;
  double cost = 0.0;
  double start_cost = 0.0;  // cost at the SGS displacement
  long evaluations = 0;
  bool converged = true;
  double max_violation = 0.0;
};

/// Constrained minimization of C(d), started from the SGS displacement.
/// On optimizer trouble the best feasible point is returned with
/// `converged == false`.
inline DistanceResult optimize_distances(const Spectrum& s, const ProjectorSet& ps, const DistanceOptions& opt = {}) {
  DistanceResult out;
  const Eigen::Index d = s.size();
  if (!s.has_negative()) {
    out.distances = RealVector::Zero(d);
    out.positive_count = s.positive_count();
    return out;
  }
  const DistanceProblem problem(s, ps);
  out.positive_count = problem.positive_count();

  const RealVector sgs = sgs_eigenvalues(s.eigenvalues).values;
  const RealVector start_full = sgs - s.eigenvalues;
  RealVector start = start_full.head(problem.free_count());
  out.start_cost = problem.cost_of_free(start);

  if (problem.free_count() == 0) {
    out.distances = problem.expand(start);
    out.cost = out.start_cost;
    return out;
  }

  const double scale = std::max(std::abs(problem.negative_sum()), 1e-12);
  optim::CobylaOptions copt;
  copt.rho_begin = opt.rho_begin * scale;
  copt.rho_end = opt.rho_end * scale;
  copt.max_evaluations = opt.max_evaluations;
  copt.feasibility_tol = 1e-14;
  optim::ConstrainedProblem cp{
      [&](const Eigen::VectorXd& x) { return problem.cost_of_free(x); },
      [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(problem.constraints_of_free(x)); },
  };
  const optim::CobylaResult r = optim::minimize_cobyla(cp, start, copt);

  RealVector best = r.x;
  double best_cost = r.value;
  if (!(best_cost <= out.start_cost) || r.max_violation > copt.feasibility_tol) {
    best = start;
    best_cost = out.start_cost;
  }
  out.distances = problem.expand(best);
  out.cost = best_cost;
  out.evaluations = r.evaluations;
  out.converged = r.converged;
  out.max_violation = std::max(0.0, -problem.constraints_of_free(best).minCoeff());
  return out;
}

// ---------------------------------------------------------------------------
// profiles

struct TrialDistances {
  RealVector distances;
  int positive_count = 0;
};

struct ProfilePoint {
  double scaled_index = 0.0;
  double scaled_distance = 0.0;
};

struct ProfileBin {
  double scaled_index = 0.0;  // mean index of the points in the bin
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;
};

struct DistanceProfile {
  int num_qubits = 0;
  int trials = 0;          // trials that contributed points
  int skipped_trials = 0;  // trials without a negative block
  double purity_min = 0.0;
  double purity_max = 0.0;
  std::vector<std::vector<ProfilePoint>> per_trial;
  std::vector<ProfileBin> bins;  // non-empty bins only, ordered by index
};

/// Scaled (index, distance) pairs of one trial; empty when the trial had no
/// negative eigenvalues.
inline std::vector<ProfilePoint> scale_distances(const TrialDistances& t) {
  const Eigen::Index d = t.distances.size();
  double denom = 0.0;
  for (Eigen::Index i = t.positive_count; i < d; ++i) denom += std::abs(t.distances(i));
  std::vector<ProfilePoint> pts;
  if (!(denom > 0.0) || d < 2) return pts;
  for (Eigen::Index i = 0; i < d; ++i) {
    pts.push_back({static_cast<double>(i) / static_cast<double>(d - 1),
                   t.distances(i) * static_cast<double>(d) / denom});
  }
  return pts;
}

/// Bins scaled points of all trials on a uniform grid over [0, 1] and
/// averages per bin.
inline DistanceProfile aggregate_profiles(const std::vector<TrialDistances>& trials, int bin_count = 64) {
  if (trials.empty()) throw DomainError("aggregate_profiles: no trials");
  if (bin_count < 1) throw DomainError("aggregate_profiles: bin count must be >= 1");
  DistanceProfile profile;
  profile.num_qubits = qubits_for_dimension(trials.front().distances.size());
  std::vector<double> sx(static_cast<std::size_t>(bin_count), 0.0);
  std::vector<double> sy(sx.size(), 0.0);
  std::vector<double> syy(sx.size(), 0.0);
  std::vector<int> cnt(sx.size(), 0);
  for (const auto& t : trials) {
    auto pts = scale_distances(t);
    if (pts.empty()) {
      ++profile.skipped_trials;
      continue;
    }
    ++profile.trials;
    for (const auto& p : pts) {
      const auto b = static_cast<std::size_t>(std::min(bin_count - 1, static_cast<int>(std::floor(p.scaled_index * bin_count))));
      sx[b] += p.scaled_index;
      sy[b] += p.scaled_distance;
      syy[b] += p.scaled_distance * p.scaled_distance;
      ++cnt[b];
    }
    profile.per_trial.push_back(std::move(pts));
  }
  if (profile.trials == 0) throw DomainError("aggregate_profiles: no trial had a negative eigenvalue");
  for (std::size_t b = 0; b < cnt.size(); ++b) {
    if (cnt[b] == 0) continue;
    const double n = cnt[b];
    ProfileBin bin;
    bin.count = cnt[b];
    bin.scaled_index = sx[b] / n;
    bin.mean = sy[b] / n;
    bin.stddev = cnt[b] > 1 ? std::sqrt(std::max(0.0, (syy[b] - n * bin.mean * bin.mean) / (n - 1.0))) : 0.0;
    profile.bins.push_back(bin);
  }
  return profile;
}

struct FitResult {
  FitCurve curve;
  double chi_square = 0.0;  // mean squared residual over the fitted bins
  int points = 0;
};

/// Least-squares fit of sum_k c_k (x - 1)^(2k - 1) to the bin means, with the
/// index axis mapped to x = 2 * scaled_index. The first grid cell (the
/// largest eigenvalue, whose displacement is pinned to zero) is left out.
inline FitResult fit_odd_series(const DistanceProfile& profile, int terms, int bin_count = 64) {
  if (terms < 1) throw DomainError("fit_odd_series: terms must be >= 1");
  std::vector<std::pair<double, double>> pts;
  const double first_cell = 1.0 / static_cast<double>(bin_count);
  for (const auto& b : profile.bins) {
    if (b.scaled_index < first_cell) continue;
    pts.emplace_back(2.0 * b.scaled_index, b.mean);
  }
  if (pts.empty()) throw DomainError("fit_odd_series: empty profile");
  const auto rows = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd design(rows, terms);
  RealVector y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double t = pts[static_cast<std::size_t>(r)].first - 1.0;
    double power = t;
    for (int k = 0; k < terms; ++k) {
      design(r, k) = power;
      power *= t * t;
    }
    y(r) = pts[static_cast<std::size_t>(r)].second;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < terms) {
    throw IllConditioned("fit_odd_series: design rank " + std::to_string(qr.rank()) + " < " + std::to_string(terms) +
                         " terms; reduce the number of terms");
  }
  const RealVector c = qr.solve(y);
  FitResult out;
  out.curve.coefficients.assign(c.data(), c.data() + c.size());
  out.chi_square = (design * c - y).squaredNorm() / static_cast<double>(rows);
  out.points = static_cast<int>(rows);
  return out;
}

}  // namespace qtomo
