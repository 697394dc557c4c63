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

#include <gtest/gtest.h>

#include "support.hpp"

namespace qtomo {
namespace {

TEST(RandomPureState, RankOneAndDeterministic) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DensityMatrix a = random_pure_state(3, seed);
    EXPECT_NEAR(purity(a), 1.0, 1e-12);
    EXPECT_NEAR(a.trace().real(), 1.0, 1e-12);
    EXPECT_TRUE(a == random_pure_state(3, seed));
  }
  EXPECT_FALSE(random_pure_state(2, 1) == random_pure_state(2, 2));
}

TEST(RandomPureState, HaarMeanIsMaximallyMixed) {
  const int samples = 10000;
  Matrix mean = Matrix::Zero(4, 4);
  for (int s = 0; s < samples; ++s) mean += random_pure_state(2, static_cast<std::uint64_t>(s)).matrix();
  mean /= samples;
  EXPECT_LT((mean - 0.25 * Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 3.0 / std::sqrt(samples));
}

TEST(MixedState, UnitPurityParameterReturnsPureState) {
  StateRecipe r;
  r.num_qubits = 2;
  r.purity_param = 1.0;
  r.rotation_strength = 0.3;
  r.seed = 7;
  EXPECT_TRUE(mixed_state(r) == random_pure_state(2, 7));
}

TEST(MixedState, SmallPurityParameterApproachesUniform) {
  StateRecipe r;
  r.num_qubits = 2;
  r.purity_param = 1e-9;
  r.seed = 3;
  const DensityMatrix m = mixed_state(r);
  EXPECT_NEAR(purity(m), 0.25, 1e-8);
  // Direct evaluation of the mixture with no rotation error.
  const Matrix expected = 1e-9 * random_pure_state(2, 3).matrix() + (1.0 - 1e-9) / 3.0 * 2.0 * Matrix::Identity(4, 4) / 4.0;
  EXPECT_LT((m.matrix() - expected / expected.trace().real()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(MixedState, PhysicalDeterministicAndMonotone) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    StateRecipe r;
    r.num_qubits = 3;
    r.rotation_strength = 0.1;
    r.seed = seed;
    double last = 0.0;
    for (double p = 0.05; p <= 1.0; p += 0.05) {
      r.purity_param = p;
      const DensityMatrix m = mixed_state(r);
      EXPECT_GE(m.min_eigenvalue(), -1e-12);
      EXPECT_NEAR(m.trace().real(), 1.0, 1e-12);
      EXPECT_TRUE(m.is_hermitian());
      EXPECT_TRUE(m == mixed_state(r));
      StateRecipe plain = r;
      plain.rotation_strength = 0.0;
      const double pur = purity(mixed_state(plain));
      EXPECT_GE(pur, last - 1e-14);
      last = pur;
    }
  }
}

TEST(MixedState, OversizedRotationIsRejected) {
  StateRecipe r;
  r.num_qubits = 2;
  r.purity_param = 0.01;
  r.rotation_strength = 50.0;
  bool threw = false;
  for (std::uint64_t seed = 0; seed < 20 && !threw; ++seed) {
    r.seed = seed;
    try {
      mixed_state(r);
    } catch (const NonPhysicalRecipe&) {
      threw = true;
    }
  }
  EXPECT_TRUE(threw);
}

TEST(SolvePurityParam, HitsTargetPurity) {
  StateRecipe r;
  r.num_qubits = 2;
  r.zero_fraction = 0.25;
  r.rotation_strength = 0.1;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    r.seed = seed;
    r.purity_param = solve_purity_param(r, 0.94);
    EXPECT_NEAR(purity(rank_deficient_state(r)), 0.94, 1e-9);
  }
}

TEST(RankDeficientState, ZeroFractionZeroIsMixedState) {
  StateRecipe r;
  r.num_qubits = 2;
  r.purity_param = 0.8;
  r.seed = 5;
  EXPECT_TRUE(rank_deficient_state(r) == mixed_state(r));
}

TEST(RankDeficientState, ZeroesTheSmallestEigenvalues) {
  for (double zf : {0.25, 0.5, 0.75}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      StateRecipe r;
      r.num_qubits = 2;
      r.purity_param = 0.7;
      r.zero_fraction = zf;
      r.seed = seed;
      const DensityMatrix m = rank_deficient_state(r);
      const Spectrum s = eigendecompose(m);
      const auto zeros = static_cast<Eigen::Index>(std::floor(zf * 4));
      for (Eigen::Index i = 4 - zeros; i < 4; ++i) EXPECT_NEAR(s.eigenvalues(i), 0.0, 1e-12);
      EXPECT_GT(s.eigenvalues(3 - zeros), 1e-6);
      EXPECT_NEAR(m.trace().real(), 1.0, 1e-12);
      EXPECT_GE(m.min_eigenvalue(), -1e-12);
    }
  }
}

TEST(StateRecipe, Validation) {
  StateRecipe r;
  r.purity_param = 0.0;
  EXPECT_THROW(r.validate(), DomainError);
  r.purity_param = 0.5;
  r.zero_fraction = 1.0;
  EXPECT_THROW(r.validate(), DomainError);
  r.zero_fraction = 0.0;
  r.rotation_strength = -1.0;
  EXPECT_THROW(r.validate(), DomainError);
}

}  // namespace
}  // namespace qtomo
