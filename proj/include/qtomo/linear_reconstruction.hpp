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

// Linear inversion of measured probabilities onto the Pauli operator basis.
//
// The estimate is rho(s) = (I + sum_a s_a G_a) / 2^n with s minimizing
// sum_j (<m_j|rho(s)|m_j> - m_j)^2. For cube settings the problem decouples
// per Pauli string: the least-squares coefficient is the average, over every
// setting and outcome subset compatible with the string, of the empirical
// parity. Other projector sets go through a cached dense least-squares solve.

#pragma once

#include <bit>
#include <memory>
#include <vector>

#include "qtomo/measurement.hpp"

namespace qtomo {

namespace detail {

/// rho = (1/d) sum_P coeffs[P] P, with P indexed in base 4 (qubit 0 most
/// significant, digit 0..3 = I, X, Y, Z).
inline Matrix assemble_from_pauli(int num_qubits, const RealVector& coeffs) {
  const Eigen::Index d = dimension_of(num_qubits);
  const Complex i1(0.0, 1.0);
  Matrix rho = Matrix::Zero(d, d);
  for (Eigen::Index a = 0; a < coeffs.size(); ++a) {
    const double c = coeffs(a);
    if (c == 0.0) continue;
    std::size_t flip = 0;  // bit set where the operator is X or Y
    std::vector<int> digits(static_cast<std::size_t>(num_qubits));
    std::size_t rest = static_cast<std::size_t>(a);
    for (int q = num_qubits - 1; q >= 0; --q) {
      digits[static_cast<std::size_t>(q)] = static_cast<int>(rest % 4);
      rest /= 4;
    }
    for (int q = 0; q < num_qubits; ++q) {
      const int g = digits[static_cast<std::size_t>(q)];
      if (g == 1 || g == 2) flip |= std::size_t{1} << (num_qubits - 1 - q);
    }
    for (Eigen::Index col = 0; col < d; ++col) {
      Complex phase(1.0, 0.0);
      for (int q = 0; q < num_qubits; ++q) {
        const int g = digits[static_cast<std::size_t>(q)];
        const bool bit = (static_cast<std::size_t>(col) >> (num_qubits - 1 - q)) & 1U;
        if (g == 2) {
          phase *= bit ? -i1 : i1;
        } else if (g == 3 && bit) {
          phase = -phase;
        }
      }
      const auto row = static_cast<Eigen::Index>(static_cast<std::size_t>(col) ^ flip);
      rho(row, col) += c * phase;
    }
  }
  return rho / static_cast<double>(d);
}

/// In-place Walsh-Hadamard transform: out[S] = sum_o (-1)^{|o & S|} in[o].
inline void walsh_hadamard(std::vector<double>& v) {
  for (std::size_t h = 1; h < v.size(); h <<= 1) {
    for (std::size_t i = 0; i < v.size(); i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double x = v[j];
        const double y = v[j + h];
        v[j] = x + y;
        v[j + h] = x - y;
      }
    }
  }
}

}  // namespace detail

/// Linear estimator bound to one projector set. Immutable after construction
/// and safe to share across threads.
class LinearReconstructor {
 public:
  explicit LinearReconstructor(std::shared_ptr<const ProjectorSet> ps) : ps_(std::move(ps)) {
    if (!ps_) throw DomainError("linear reconstructor without projector set");
    cube_ = ps_->all_cube();
    if (cube_) {
      prepare_cube();
    } else {
      prepare_general();
    }
  }

  const ProjectorSet& projector_set() const noexcept { return *ps_; }

  /// Estimate from per-projector probabilities (normalized within settings).
  DensityMatrix reconstruct(const RealVector& probabilities) const {
    if (probabilities.size() != static_cast<Eigen::Index>(ps_->size())) {
      throw DomainError("linear_reconstruct: probability vector size mismatch");
    }
    const int n = ps_->num_qubits();
    RealVector coeffs = cube_ ? cube_coefficients(probabilities) : general_coefficients(probabilities);
    Matrix rho = detail::assemble_from_pauli(n, coeffs);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return DensityMatrix(n, std::move(rho));
  }

 private:
  void prepare_cube() {
    const int n = ps_->num_qubits();
    const std::size_t pauli_count = detail::ipow(4, n);
    coverage_.assign(pauli_count, 0);
    for (const auto& setting : ps_->settings()) {
      for (std::size_t subset = 0; subset < static_cast<std::size_t>(dimension_of(n)); ++subset) {
        ++coverage_[pauli_index(setting.bases, subset)];
      }
    }
    for (std::size_t a = 1; a < pauli_count; ++a) {
      if (coverage_[a] == 0) throw SingularDesign("cube settings do not cover every Pauli operator");
    }
  }

  std::size_t pauli_index(const std::vector<int>& bases, std::size_t subset) const {
    const int n = ps_->num_qubits();
    std::size_t a = 0;
    for (int q = 0; q < n; ++q) {
      const bool in = (subset >> (n - 1 - q)) & 1U;
      a = a * 4 + (in ? static_cast<std::size_t>(bases[static_cast<std::size_t>(q)] + 1) : 0);
    }
    return a;
  }

  RealVector cube_coefficients(const RealVector& probabilities) const {
    RealVector sums = RealVector::Zero(static_cast<Eigen::Index>(coverage_.size()));
    const auto d = static_cast<std::size_t>(ps_->dim());
    std::vector<double> buf(d);
    for (const auto& setting : ps_->settings()) {
      for (std::size_t o = 0; o < d; ++o) buf[o] = probabilities(static_cast<Eigen::Index>(setting.projectors[o]));
      detail::walsh_hadamard(buf);
      for (std::size_t subset = 0; subset < d; ++subset) {
        sums(static_cast<Eigen::Index>(pauli_index(setting.bases, subset))) += buf[subset];
      }
    }
    RealVector coeffs(sums.size());
    coeffs(0) = 1.0;
    for (Eigen::Index a = 1; a < sums.size(); ++a) {
      coeffs(a) = sums(a) / static_cast<double>(coverage_[static_cast<std::size_t>(a)]);
    }
    return coeffs;
  }

  void prepare_general() {
    const int n = ps_->num_qubits();
    const auto basis = pauli_basis(n);
    const double d = static_cast<double>(ps_->dim());
    const auto rows = static_cast<Eigen::Index>(ps_->size());
    const auto cols = static_cast<Eigen::Index>(basis.size()) - 1;
    Eigen::MatrixXd design(rows, cols);
    for (Eigen::Index j = 0; j < rows; ++j) {
      const Vector& m = ps_->projectors()[static_cast<std::size_t>(j)].ket;
      for (Eigen::Index a = 0; a < cols; ++a) {
        design(j, a) = m.dot(basis[static_cast<std::size_t>(a + 1)] * m).real() / d;
      }
    }
    solver_ = std::make_shared<const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>>(design);
    if (solver_->rank() < cols) {
      throw SingularDesign("projector set is not informationally complete (rank " +
                           std::to_string(solver_->rank()) + " < " + std::to_string(cols) + ")");
    }
  }

  RealVector general_coefficients(const RealVector& probabilities) const {
    const double d = static_cast<double>(ps_->dim());
    RealVector rhs = probabilities.array() - 1.0 / d;
    RealVector s = solver_->solve(rhs);
    RealVector coeffs(s.size() + 1);
    coeffs(0) = 1.0;
    coeffs.tail(s.size()) = s;
    return coeffs;
  }

  std::shared_ptr<const ProjectorSet> ps_;
  bool cube_ = false;
  std::vector<int> coverage_;
  std::shared_ptr<const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>> solver_;
};

inline DensityMatrix linear_reconstruct(const CountRecord& cr) {
  return LinearReconstructor(cr.projector_set_ptr()).reconstruct(cr.probabilities());
}

}  // namespace qtomo
