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

#include <string>
#include <utility>
#include <vector>

#include "qtomo/errors.hpp"

namespace qtomo {

/// Weighted-normalization curve F(x) = sum_k c_k (x - 1)^(2k - 1) on [0, 2].
///
/// F is evaluated as t * P(t^2) with t = x - 1, so F(1) == 0 and
/// F(1 + t) == -F(1 - t) hold bit-exactly whenever x - 1 is exact (which it
/// is for x in [0.5, 2]).
struct FitCurve {
  std::vector<double> coefficients;

  /// Six-term curve fitted to 6-qubit distance profiles; the library default.
  static FitCurve reference() { return FitCurve{{1.21, 21.03, -119.80, 339.23, -418.31, 188.26}}; }

  double odd_part(double t) const {
    const double t2 = t * t;
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * t2 + *it;
    return t * acc;
  }

  double operator()(double x) const {
    if (!(x >= 0.0 && x <= 2.0)) throw DomainError("fit curve argument " + std::to_string(x) + " outside [0, 2]");
    return odd_part(x - 1.0);
  }
};

inline double eval_fit(const FitCurve& f, double x) { return f(x); }

}  // namespace qtomo
