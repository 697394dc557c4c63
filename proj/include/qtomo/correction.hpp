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

// Physicality corrections for linear reconstructions.
//
//   sgs  - zero the negative eigenvalues and spread their (negative) sum
//          evenly over the positive ones, repeating until none is negative.
//   eo   - keep the largest eigenvalue, zero the negative block and spread
//          its signed sum over eigenvalues 2..n_+ with weights
//          F((i - 1) / (n_+ - 0.5)) from a FitCurve, repeating likewise.
//   mle  - minimize sum_j (p_j - m_j)^2 / (2 p_j) over rho = T^dagger T / Tr
//          with T upper triangular, by restarted Nelder-Mead.
//   imle - fixed-point iteration rho <- N[R rho R], R = sum_j m_j/p_j |m_j><m_j|.
//
// The spectral methods never touch eigenvectors.

#pragma once

#include <chrono>
#include <limits>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qtomo/density.hpp"
#include "qtomo/fit_curve.hpp"
#include "qtomo/measurement.hpp"
#include "qtomo/optim/nelder_mead.hpp"

namespace qtomo {

inline constexpr double kProbabilityFloor = 1e-12;

/// Bookkeeping for one EO pass: the signed sum of the eigenvalues removed and
/// the sum of the corrections applied to the kept ones (equal up to rounding).
struct EoRound {
  double removed_total = 0.0;
  double correction_sum = 0.0;
  int positive_count = 0;
};

struct CorrectionReport {
  DensityMatrix output;
  /// Corrected eigenvalues paired with the input eigenvectors (spectral
  /// methods only).
  RealVector eigenvalues;
  int iterations = 0;
  std::optional<double> cost_before;
  std::optional<double> cost_after;
  std::chrono::nanoseconds wall_time{0};
  bool converged = true;
  std::vector<EoRound> rounds;
};

// ---------------------------------------------------------------------------
// costs

inline double loglike_cost(const RealVector& predicted, const RealVector& observed) {
  double c = 0.0;
  for (Eigen::Index j = 0; j < predicted.size(); ++j) {
    const double r = predicted(j) - observed(j);
    c += r * r / (2.0 * std::max(predicted(j), kProbabilityFloor));
  }
  return c;
}

inline double quadratic_cost(const RealVector& predicted, const RealVector& observed) {
  return (predicted - observed).squaredNorm();
}

/// sum_j (<m_j|rho|m_j> - m_j)^2 / (2 <m_j|rho|m_j>), denominators floored at 1e-12.
inline double loglike_cost(const DensityMatrix& candidate, const CountRecord& cr) {
  return loglike_cost(born_probabilities(candidate, cr.projector_set()), cr.probabilities());
}

/// sum_j (<m_j|rho|m_j> - m_j)^2.
inline double quadratic_cost(const DensityMatrix& candidate, const CountRecord& cr) {
  return quadratic_cost(born_probabilities(candidate, cr.projector_set()), cr.probabilities());
}

// ---------------------------------------------------------------------------
// spectral corrections

namespace detail {

inline void require_unit_sum(const RealVector& v, const char* who) {
  const double sum = v.sum();
  if (!(std::abs(sum - 1.0) <= 1e-9)) {
    throw DomainError(std::string(who) + ": eigenvalues must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

template <class Clock = std::chrono::steady_clock>
struct Stopwatch {
  typename Clock::time_point start = Clock::now();
  std::chrono::nanoseconds elapsed() const { return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start); }
};

}  // namespace detail

struct SpectralResult {
  RealVector values;
  int iterations = 0;
  std::vector<EoRound> rounds;
};

/// SGS on a descending eigenvalue vector. Throws DegenerateInput if nothing is
/// positive.
inline SpectralResult sgs_eigenvalues(RealVector values, int max_iterations = 1000) {
  SpectralResult out;
  while ((values.array() < 0.0).any()) {
    if (out.iterations >= max_iterations) throw NoConvergence("sgs: iteration limit reached");
    const auto positives = (values.array() > 0.0).count();
    if (positives == 0) throw DegenerateInput("sgs: no positive eigenvalue");
    double removed = 0.0;
    for (double& x : values) {
      if (x < 0.0) {
        removed += x;
        x = 0.0;
      }
    }
    const double share = removed / static_cast<double>(positives);
    for (double& x : values) {
      if (x > 0.0) x += share;
    }
    ++out.iterations;
  }
  out.values = std::move(values);
  return out;
}

/// EO on an eigenvalue vector (any order; each pass works on the values
/// sorted descending). n_+ counts strictly positive values; when n_+ == 1 the
/// single positive eigenvalue absorbs the whole trace.
inline SpectralResult eo_eigenvalues(RealVector values, const FitCurve& curve, int max_iterations = 1000) {
  SpectralResult out;
  const Eigen::Index d = values.size();
  while ((values.array() < 0.0).any()) {
    if (out.iterations >= max_iterations) throw NoConvergence("eo: iteration limit reached");
    const std::vector<Eigen::Index> order = detail::descending_order(values);
    const int n_plus = static_cast<int>((values.array() > 0.0).count());
    if (n_plus == 0) throw DegenerateInput("eo: no positive eigenvalue");

    EoRound round;
    round.positive_count = n_plus;
    for (Eigen::Index r = n_plus; r < d; ++r) round.removed_total += values(order[static_cast<std::size_t>(r)]);

    if (n_plus == 1) {
      values(order[0]) += round.removed_total;
      round.correction_sum = round.removed_total;
    } else {
      const double denom = static_cast<double>(n_plus) - 0.5;
      double normalization = 0.0;
      for (int i = 2; i <= n_plus; ++i) normalization += curve(static_cast<double>(i - 1) / denom);
      if (!(std::isfinite(normalization) && normalization != 0.0)) {
        throw DegenerateInput("eo: fit curve weights sum to zero");
      }
      const double scale = round.removed_total / normalization;
      for (int i = 2; i <= n_plus; ++i) {
        const double c = scale * curve(static_cast<double>(i - 1) / denom);
        values(order[static_cast<std::size_t>(i - 1)]) += c;
        round.correction_sum += c;
      }
    }
    for (Eigen::Index r = n_plus; r < d; ++r) values(order[static_cast<std::size_t>(r)]) = 0.0;
    out.rounds.push_back(round);
    ++out.iterations;
  }
  out.values = std::move(values);
  return out;
}

inline CorrectionReport sgs_correct(const Spectrum& s) {
  detail::Stopwatch<> watch;
  detail::require_unit_sum(s.eigenvalues, "sgs_correct");
  SpectralResult r = sgs_eigenvalues(s.eigenvalues);
  CorrectionReport report;
  report.output = from_spectrum(Spectrum{r.values, s.eigenvectors});
  report.eigenvalues = std::move(r.values);
  report.iterations = r.iterations;
  report.wall_time = watch.elapsed();
  return report;
}

inline CorrectionReport eo_correct(const Spectrum& s, const FitCurve& curve = FitCurve::reference()) {
  detail::Stopwatch<> watch;
  detail::require_unit_sum(s.eigenvalues, "eo_correct");
  SpectralResult r = eo_eigenvalues(s.eigenvalues, curve);
  CorrectionReport report;
  report.output = from_spectrum(Spectrum{r.values, s.eigenvectors});
  report.eigenvalues = std::move(r.values);
  report.iterations = r.iterations;
  report.rounds = std::move(r.rounds);
  report.wall_time = watch.elapsed();
  return report;
}

// ---------------------------------------------------------------------------
// maximum likelihood

/// Upper-triangular Cholesky-type parameterization rho = T^dagger T / Tr.
/// Parameters: d real diagonal entries, then (Re, Im) of T(i, j) for i < j
/// in row-major order; 4^n reals in total.
class TriangularParameterization {
 public:
  explicit TriangularParameterization(Eigen::Index dim) : d_(dim) {}

  Eigen::Index size() const noexcept { return d_ * d_; }

  Matrix factor(const RealVector& t) const {
    Matrix m = Matrix::Zero(d_, d_);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < d_; ++i) m(i, i) = t(k++);
    for (Eigen::Index i = 0; i < d_; ++i) {
      for (Eigen::Index j = i + 1; j < d_; ++j) {
        m(i, j) = Complex(t(k), t(k + 1));
        k += 2;
      }
    }
    return m;
  }

  DensityMatrix state(const RealVector& t) const {
    const Matrix f = factor(t);
    Matrix rho = f.adjoint() * f;
    rho /= rho.trace().real();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return DensityMatrix(std::move(rho));
  }

  /// Parameters whose state equals `rho` (PSD, any rank).
  RealVector from_state(const DensityMatrix& rho) const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.hermitian_part());
    RealVector roots = es.eigenvalues().unaryExpr([](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
    const Matrix m = roots.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < d_; ++i) {
      const double mag = std::abs(r(i, i));
      if (mag > 0.0) r.row(i) *= std::conj(r(i, i)) / mag;
    }
    RealVector t(size());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < d_; ++i) t(k++) = r(i, i).real();
    for (Eigen::Index i = 0; i < d_; ++i) {
      for (Eigen::Index j = i + 1; j < d_; ++j) {
        t(k++) = r(i, j).real();
        t(k++) = r(i, j).imag();
      }
    }
    return t;
  }

 private:
  Eigen::Index d_;
};

struct MleOptions {
  optim::NelderMeadOptions search{};
};

/// Direct likelihood minimization started from `init` (typically the EO
/// output). Never returns a state with higher cost than `init`.
inline CorrectionReport mle_correct(const CountRecord& cr, const DensityMatrix& init, const MleOptions& opt = {}) {
  detail::Stopwatch<> watch;
  if (!init.is_physical()) throw NonPhysicalInput("mle_correct: initial state is not physical");
  const ProjectorSet& ps = cr.projector_set();
  if (init.dim() != ps.dim()) throw DomainError("mle_correct: dimension mismatch");
  const TriangularParameterization param(init.dim());
  const Matrix& kets = ps.ket_matrix();
  const RealVector& observed = cr.probabilities();
  const Eigen::Index count = kets.cols();

  auto cost = [&](const RealVector& t) {
    const Matrix f = param.factor(t);
    const double norm = f.squaredNorm();
    if (!(norm > 0.0)) return std::numeric_limits<double>::infinity();
    const Matrix fk = f.triangularView<Eigen::Upper>() * kets;
    double c = 0.0;
    for (Eigen::Index j = 0; j < count; ++j) {
      const double p = fk.col(j).squaredNorm() / norm;
      const double r = p - observed(j);
      c += r * r / (2.0 * std::max(p, kProbabilityFloor));
    }
    return c;
  };

  CorrectionReport report;
  report.cost_before = loglike_cost(init, cr);
  const RealVector t0 = param.from_state(init);
  // The cost is bounded below by zero, so no step can gain more than ftol.
  if (cost(t0) <= opt.search.ftol) {
    report.output = init;
    report.cost_after = report.cost_before;
    report.wall_time = watch.elapsed();
    return report;
  }
  optim::NelderMeadResult nm = optim::nelder_mead(cost, t0, opt.search);
  if (nm.value < *report.cost_before) {
    report.output = param.state(nm.x);
  } else {
    report.output = init;
  }
  report.cost_after = loglike_cost(report.output, cr);
  if (*report.cost_after > *report.cost_before) {
    report.output = init;
    report.cost_after = report.cost_before;
  }
  report.iterations = static_cast<int>(nm.evaluations);
  report.converged = nm.converged;
  report.wall_time = watch.elapsed();
  return report;
}

struct ImleOptions {
  int max_iterations = 10000;
  double tolerance = 1e-10;  // max entrywise change between iterates
};

/// R rho R iteration with trace normalization, started from `init`.
inline CorrectionReport imle_correct(const CountRecord& cr, const DensityMatrix& init, const ImleOptions& opt = {}) {
  detail::Stopwatch<> watch;
  if (!init.is_physical()) throw NonPhysicalInput("imle_correct: initial state is not physical");
  const ProjectorSet& ps = cr.projector_set();
  if (init.dim() != ps.dim()) throw DomainError("imle_correct: dimension mismatch");
  const Matrix& kets = ps.ket_matrix();
  const RealVector& observed = cr.probabilities();
  const Eigen::Index count = kets.cols();

  CorrectionReport report;
  report.cost_before = loglike_cost(init, cr);
  report.converged = false;
  Matrix rho = init.matrix();
  RealVector weights(count);
  for (int it = 0; it < opt.max_iterations; ++it) {
    const Matrix rho_kets = rho * kets;
    for (Eigen::Index j = 0; j < count; ++j) {
      const double p = kets.col(j).dot(rho_kets.col(j)).real();
      weights(j) = observed(j) / std::max(p, kProbabilityFloor);
    }
    const Matrix r = kets * weights.cast<Complex>().asDiagonal() * kets.adjoint();
    Matrix next = r * rho * r;
    next /= next.trace().real();
    next = 0.5 * (next + next.adjoint()).eval();
    const double change = (next - rho).cwiseAbs().maxCoeff();
    rho = std::move(next);
    report.iterations = it + 1;
    if (change < opt.tolerance) {
      report.converged = true;
      break;
    }
  }
  report.output = DensityMatrix(init.num_qubits(), std::move(rho));
  report.cost_after = loglike_cost(report.output, cr);
  report.wall_time = watch.elapsed();
  return report;
}

}  // namespace qtomo
