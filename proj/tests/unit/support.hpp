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

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "qtomo/qtomo.hpp"

namespace qtomo::testing {

inline Matrix random_hermitian(Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) a(r, c) = Complex(g(rng), g(rng));
  }
  return 0.5 * (a + a.adjoint());
}

/// Random full-rank state W W^dagger / Tr from a complex Gaussian W.
inline DensityMatrix random_state(int n, std::uint64_t seed) {
  const Eigen::Index d = dimension_of(n);
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix w(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) w(r, c) = Complex(g(rng), g(rng));
  }
  Matrix rho = w * w.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(n, 0.5 * (rho + rho.adjoint()));
}

inline Matrix random_unitary(Eigen::Index d, std::uint64_t seed) {
  Eigen::HouseholderQR<Matrix> qr(random_hermitian(d, seed) + Complex(0.0, 1.0) * random_hermitian(d, seed + 1));
  return qr.householderQ();
}

/// Unit-trace eigenvalue vector, descending, with at least one negative entry.
inline RealVector random_nonphysical_values(Eigen::Index d, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    RealVector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = u(rng);
    v(0) += 1.0;
    v /= v.sum();
    const Eigen::Index negatives = 1 + static_cast<Eigen::Index>(u(rng) * static_cast<double>(d / 2));
    const double shift = 0.25 * u(rng) / static_cast<double>(d);
    std::sort(v.data(), v.data() + d, std::greater<>());
    for (Eigen::Index i = d - negatives; i < d; ++i) v(i) = -shift * u(rng) - 1e-4;
    const double positive_mass = v.head(d - negatives).sum();
    const double negative_mass = v.tail(negatives).sum();
    v.head(d - negatives) *= (1.0 - negative_mass) / positive_mass;
    std::sort(v.data(), v.data() + d, std::greater<>());
    if ((v.array() < 0.0).any() && (v.array() > 0.0).any()) return v;
  }
}

inline Spectrum spectrum_with_random_vectors(const RealVector& values, std::uint64_t seed) {
  return Spectrum{values, random_unitary(values.size(), seed)};
}

}  // namespace qtomo::testing
