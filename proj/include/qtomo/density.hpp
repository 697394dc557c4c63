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

// Dense density matrices, their spectra, and the state metrics used across
// the library (fidelity, purity).

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qtomo/errors.hpp"

namespace qtomo {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Numerical tolerances shared by the library. Defaults are the documented
/// contract; every entry point accepts an override.
struct Tolerances {
  double hermitian = 1e-10;       // max |A - A^dagger| entrywise
  double trace = 1e-10;           // |Re Tr - 1| for normalized matrices
  double imag_trace = 1e-12;      // |Im Tr|
  double physical = 1e-10;        // eigenvalues >= -physical
  double reject_negative = 1e-6;  // fidelity refuses eigenvalues below -this
  double sqrt_clip = 1e-12;       // eigenvalues below this are zero in sqrt()
};

inline constexpr int kMaxQubits = 10;

inline Eigen::Index dimension_of(int num_qubits) {
  return Eigen::Index{1} << num_qubits;
}

/// Inverse of dimension_of; throws DomainError if `dim` is not a power of two.
inline int qubits_for_dimension(Eigen::Index dim) {
  if (dim < 2 || !std::has_single_bit(static_cast<std::size_t>(dim))) {
    throw DomainError("dimension " + std::to_string(dim) + " is not 2^n with n >= 1");
  }
  return std::countr_zero(static_cast<std::size_t>(dim));
}

/// A 2^n x 2^n complex matrix tagged with its qubit count. Construction only
/// checks the shape; hermiticity and physicality are queried explicitly
/// because linear reconstructions are routinely non-physical.
class DensityMatrix {
 public:
  DensityMatrix() = default;

  DensityMatrix(int num_qubits, Matrix entries) : n_(num_qubits), m_(std::move(entries)) {
    if (num_qubits < 1 || num_qubits > kMaxQubits) {
      throw DomainError("qubit count " + std::to_string(num_qubits) + " out of range");
    }
    const Eigen::Index d = dimension_of(num_qubits);
    if (m_.rows() != d || m_.cols() != d) {
      throw DomainError("matrix shape does not match 2^n x 2^n for n = " +
                        std::to_string(num_qubits));
    }
  }

  explicit DensityMatrix(Matrix entries) : n_(qubits_for_dimension(entries.rows())), m_(std::move(entries)) {
    if (m_.cols() != m_.rows()) throw DomainError("matrix is not square");
  }

  static DensityMatrix maximally_mixed(int num_qubits) {
    const Eigen::Index d = dimension_of(num_qubits);
    return {num_qubits, Matrix::Identity(d, d) / static_cast<double>(d)};
  }

  /// |psi><psi| / <psi|psi>.
  static DensityMatrix pure(const Vector& psi) {
    const double norm2 = psi.squaredNorm();
    if (!(norm2 > 0.0)) throw DomainError("zero state vector");
    Matrix m = psi * psi.adjoint() / norm2;
    return DensityMatrix(std::move(m));
  }

  int num_qubits() const noexcept { return n_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }

  Complex trace() const { return m_.trace(); }

  double hermiticity_error() const {
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
  }

  bool is_hermitian(const Tolerances& tol = {}) const {
    return hermiticity_error() <= tol.hermitian;
  }

  bool is_normalized(const Tolerances& tol = {}) const {
    const Complex t = trace();
    return std::abs(t.real() - 1.0) <= tol.trace && std::abs(t.imag()) <= tol.imag_trace;
  }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(), Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
  }

  bool is_physical(const Tolerances& tol = {}) const {
    return is_hermitian(tol) && min_eigenvalue() >= -tol.physical;
  }

  Matrix hermitian_part() const { return 0.5 * (m_ + m_.adjoint()); }

  friend bool operator==(const DensityMatrix& a, const DensityMatrix& b) {
    return a.n_ == b.n_ && a.m_ == b.m_;
  }

 private:
  int n_ = 0;
  Matrix m_;
};

/// Eigenvalues in descending order with the matching orthonormal eigenvectors
/// stored column-wise.
struct Spectrum {
  RealVector eigenvalues;
  Matrix eigenvectors;

  Eigen::Index size() const noexcept { return eigenvalues.size(); }

  /// Number of strictly positive eigenvalues.
  int positive_count() const {
    return static_cast<int>((eigenvalues.array() > 0.0).count());
  }

  bool has_negative() const { return (eigenvalues.array() < 0.0).any(); }
};

namespace detail {

inline bool is_exactly_diagonal(const Matrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (r != c && m(r, c) != Complex{}) return false;
    }
  }
  return true;
}

/// Stable descending order of `values`.
inline std::vector<Eigen::Index> descending_order(const RealVector& values) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return values(a) > values(b);
  });
  return order;
}

inline Spectrum reorder(const RealVector& values, const Matrix& vectors,
                        const std::vector<Eigen::Index>& order) {
  Spectrum s;
  s.eigenvalues.resize(values.size());
  s.eigenvectors.resize(vectors.rows(), vectors.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    s.eigenvalues(i) = values(order[k]);
    s.eigenvectors.col(i) = vectors.col(order[k]);
  }
  return s;
}

/// Principal square root of a Hermitian PSD matrix; eigenvalues below `clip`
/// are treated as zero.
inline Matrix psd_sqrt(const Matrix& h, double clip) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  RealVector roots = solver.eigenvalues().unaryExpr(
      [clip](double x) { return x < clip ? 0.0 : std::sqrt(x); });
  const Matrix& v = solver.eigenvectors();
  return v * roots.cast<Complex>().asDiagonal() * v.adjoint();
}

}  // namespace detail

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending. Ties keep
/// the solver's order. Diagonal inputs are decomposed exactly.
inline Spectrum eigendecompose(const DensityMatrix& m, const Tolerances& tol = {}) {
  const double err = m.hermiticity_error();
  if (err > tol.hermitian) {
    throw NonHermitian("matrix is not Hermitian (max |A - A^dagger| = " + std::to_string(err) +
                       ")");
  }
  const Eigen::Index d = m.dim();
  if (detail::is_exactly_diagonal(m.matrix())) {
    RealVector values = m.matrix().diagonal().real();
    return detail::reorder(values, Matrix::Identity(d, d), detail::descending_order(values));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.hermitian_part());
  if (solver.info() != Eigen::Success) throw NoConvergence("Hermitian eigensolver failed");
  return detail::reorder(solver.eigenvalues(), solver.eigenvectors(),
                         detail::descending_order(solver.eigenvalues()));
}

/// Sum_i lambda_i |v_i><v_i|, Hermitian by construction.
inline DensityMatrix from_spectrum(const Spectrum& s) {
  const Matrix& v = s.eigenvectors;
  Matrix m = v * s.eigenvalues.cast<Complex>().asDiagonal() * v.adjoint();
  Matrix h = 0.5 * (m + m.adjoint());
  return DensityMatrix(std::move(h));
}

/// Tr(rho^2).
inline double purity(const DensityMatrix& m) {
  return m.matrix().cwiseAbs2().sum();
}

/// Uhlmann fidelity Tr^2( sqrt( sqrt(a) b sqrt(a) ) ), clamped to [0, 1].
/// Throws NonPhysicalInput when either argument has an eigenvalue below
/// -tol.reject_negative; smaller negative eigenvalues are clipped to zero.
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b, const Tolerances& tol = {}) {
  if (a.dim() != b.dim()) throw DomainError("fidelity: dimension mismatch");
  for (const DensityMatrix* m : {&a, &b}) {
    if (m->hermiticity_error() > tol.hermitian) throw NonHermitian("fidelity: input not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> ea(a.hermitian_part());
  Eigen::SelfAdjointEigenSolver<Matrix> eb(b.hermitian_part(), Eigen::EigenvaluesOnly);
  if (ea.eigenvalues().minCoeff() < -tol.reject_negative ||
      eb.eigenvalues().minCoeff() < -tol.reject_negative) {
    throw NonPhysicalInput("fidelity: input has a negative eigenvalue");
  }
  const double clip = tol.sqrt_clip;
  RealVector roots = ea.eigenvalues().unaryExpr(
      [clip](double x) { return x < clip ? 0.0 : std::sqrt(x); });
  const Matrix& va = ea.eigenvectors();
  const Matrix sqrt_a = va * roots.cast<Complex>().asDiagonal() * va.adjoint();
  Matrix inner = sqrt_a * b.hermitian_part() * sqrt_a;
  inner = 0.5 * (inner + inner.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> ei(inner, Eigen::EigenvaluesOnly);
  double root_sum = 0.0;
  for (double mu : ei.eigenvalues()) root_sum += mu > 0.0 ? std::sqrt(mu) : 0.0;
  return std::clamp(root_sum * root_sum, 0.0, 1.0);
}

inline double infidelity(const DensityMatrix& a, const DensityMatrix& b, const Tolerances& tol = {}) {
  return 1.0 - fidelity(a, b, tol);
}

}  // namespace qtomo
