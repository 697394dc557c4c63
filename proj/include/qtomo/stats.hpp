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
#include <cstdint>
#include <random>
#include <vector>

#include "qtomo/errors.hpp"
#include "qtomo/random.hpp"

namespace qtomo::stats {

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  std::size_t count = 0;

  double standard_error() const { return count > 0 ? stddev / std::sqrt(static_cast<double>(count)) : 0.0; }
};

/// Two-pass mean and sample standard deviation, summed in index order.
inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw DomainError("pearson: need two equal-length samples");
  const double ma = summarize(a).mean;
  const double mb = summarize(b).mean;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0 && sbb > 0.0)) throw DomainError("pearson: constant sample");
  return sab / std::sqrt(saa * sbb);
}

/// Ordinary least squares slope of y on x.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("ols_slope: need two equal-length samples");
  const double mx = summarize(x).mean;
  const double my = summarize(y).mean;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw DomainError("ols_slope: x has no spread");
  return sxy / sxx;
}

/// Fraction of bootstrap resamples of the paired differences whose mean is
/// strictly positive.
inline double bootstrap_positive_fraction(const std::vector<double>& diffs, int resamples, std::uint64_t seed) {
  if (diffs.empty()) throw DomainError("bootstrap: empty sample");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, diffs.size() - 1);
  int positive = 0;
  for (int r = 0; r < resamples; ++r) {
    double sum = 0.0;
    for (std::size_t k = 0; k < diffs.size(); ++k) sum += diffs[pick(rng)];
    if (sum > 0.0) ++positive;
  }
  return static_cast<double>(positive) / static_cast<double>(resamples);
}

/// Normal-approximation 95% interval of the mean.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool overlaps(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
};

inline Interval mean_interval95(const Summary& s) {
  const double half = 1.959963984540054 * s.standard_error();
  return {s.mean - half, s.mean + half};
}

}  // namespace qtomo::stats
