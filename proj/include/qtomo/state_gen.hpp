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

// Random test states: Haar-random pure states, the noisy mixture
//   rho = p rho_pure + (1 - p)/3 (2 I/d + eps (U rho_pure U^dagger - rho_pure))
// and rank-deficient variants with a fraction of the spectrum set to zero.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "qtomo/density.hpp"
#include "qtomo/random.hpp"

namespace qtomo {

struct StateRecipe {
  int num_qubits = 2;
  double purity_param = 1.0;       // p in (0, 1]
  double zero_fraction = 0.0;      // in [0, 1)
  double rotation_strength = 0.0;  // eps >= 0, also the per-qubit rotation angle
  std::uint64_t seed = 0;

  Eigen::Index zeroed_count() const {
    return static_cast<Eigen::Index>(std::floor(zero_fraction * static_cast<double>(dimension_of(num_qubits))));
  }

  void validate() const {
    if (num_qubits < 1 || num_qubits > kMaxQubits) throw DomainError("recipe: qubit count out of range");
    if (!(purity_param > 0.0 && purity_param <= 1.0)) throw DomainError("recipe: purity_param must lie in (0, 1]");
    if (!(zero_fraction >= 0.0 && zero_fraction < 1.0)) throw DomainError("recipe: zero_fraction must lie in [0, 1)");
    if (!(rotation_strength >= 0.0)) throw DomainError("recipe: rotation_strength must be >= 0");
    if (zeroed_count() >= dimension_of(num_qubits)) throw DomainError("recipe: no nonzero eigenvalue left");
  }
};

namespace detail {

inline Vector haar_ket(int num_qubits, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector psi(dimension_of(num_qubits));
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    psi(i) = Complex(re, im);
  }
  return psi.normalized();
}

/// Tensor product of single-qubit rotations by `angle` about random axes.
inline Matrix random_local_rotation(int num_qubits, double angle, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Complex i1(0.0, 1.0);
  Matrix u = Matrix::Identity(1, 1);
  for (int q = 0; q < num_qubits; ++q) {
    Eigen::Vector3d axis;
    do {
      axis = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
    } while (axis.norm() < 1e-12);
    axis.normalize();
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    Eigen::Matrix2cd r;
    r(0, 0) = c - i1 * s * axis.z();
    r(0, 1) = -i1 * s * Complex(axis.x(), -axis.y());
    r(1, 0) = -i1 * s * Complex(axis.x(), axis.y());
    r(1, 1) = c + i1 * s * axis.z();
    Matrix next(u.rows() * 2, u.cols() * 2);
    for (Eigen::Index a = 0; a < u.rows(); ++a) {
      for (Eigen::Index b = 0; b < u.cols(); ++b) {
        next.block(2 * a, 2 * b, 2, 2) = u(a, b) * r;
      }
    }
    u = std::move(next);
  }
  return u;
}

}  // namespace detail

/// Haar-random |psi><psi| from normalized complex-Gaussian amplitudes.
inline DensityMatrix random_pure_state(int num_qubits, std::uint64_t seed) {
  if (num_qubits < 1 || num_qubits > kMaxQubits) throw DomainError("qubit count out of range");
  Rng rng(derive_seed(seed, {1}));
  return DensityMatrix::pure(detail::haar_ket(num_qubits, rng));
}

/// Mixed state with white noise and a rotation-error term, renormalized to
/// unit trace. p == 1 returns the pure state unchanged.
inline DensityMatrix mixed_state(const StateRecipe& recipe) {
  recipe.validate();
  DensityMatrix pure = random_pure_state(recipe.num_qubits, recipe.seed);
  if (recipe.purity_param == 1.0) return pure;

  const Eigen::Index d = pure.dim();
  const double p = recipe.purity_param;
  const Matrix& rho = pure.matrix();
  Matrix error = Matrix::Zero(d, d);
  if (recipe.rotation_strength > 0.0) {
    Rng rng(derive_seed(recipe.seed, {2}));
    const Matrix u = detail::random_local_rotation(recipe.num_qubits, recipe.rotation_strength, rng);
    error = recipe.rotation_strength * (u * rho * u.adjoint() - rho);
  }
  const Matrix identity_norm = Matrix::Identity(d, d) / static_cast<double>(d);
  Matrix mixed = p * rho + (1.0 - p) / 3.0 * (2.0 * identity_norm + error);
  mixed = 0.5 * (mixed + mixed.adjoint()).eval();
  mixed /= mixed.trace().real();

  DensityMatrix out(recipe.num_qubits, std::move(mixed));
  if (out.min_eigenvalue() < -1e-12) {
    throw NonPhysicalRecipe("rotation_strength " + std::to_string(recipe.rotation_strength) +
                            " produces a negative eigenvalue");
  }
  return out;
}

/// mixed_state with its floor(zero_fraction * 2^n) smallest eigenvalues set to
/// zero and the remainder rescaled to unit trace.
inline DensityMatrix rank_deficient_state(const StateRecipe& recipe) {
  DensityMatrix mixed = mixed_state(recipe);
  const Eigen::Index k = recipe.zeroed_count();
  if (k == 0) return mixed;

  Spectrum s = eigendecompose(mixed);
  const Eigen::Index d = s.size();
  s.eigenvalues.tail(k).setZero();
  for (Eigen::Index i = 0; i < d - k; ++i) s.eigenvalues(i) = std::max(0.0, s.eigenvalues(i));
  s.eigenvalues /= s.eigenvalues.sum();
  return from_spectrum(s);
}

/// Purity parameter p such that purity(rank_deficient_state) hits `target`,
/// found by bisection on p in (0, 1]. Targets below the smallest reachable
/// purity return the lower end of the bracket.
inline double solve_purity_param(StateRecipe recipe, double target, double tol = 1e-12) {
  if (!(target > 0.0 && target <= 1.0)) throw DomainError("target purity must lie in (0, 1]");
  if (target >= 1.0) return 1.0;
  auto purity_at = [&](double p) {
    recipe.purity_param = p;
    return purity(rank_deficient_state(recipe));
  };
  double lo = 1e-9;
  double hi = 1.0;
  if (purity_at(lo) >= target) return lo;
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (purity_at(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace qtomo
