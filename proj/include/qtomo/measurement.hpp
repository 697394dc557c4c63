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

// Measurement model: Pauli operator basis, rank-1 projector sets grouped into
// measurement settings, Born probabilities and finite-count simulation.
//
// Labels: a cube setting is one letter per qubit from {X, Y, Z}, qubit 0
// first (most significant in the computational index). An outcome is one bit
// per qubit, '0' for the +1 eigenstate and '1' for the -1 eigenstate. The
// projector label is "<setting>:<outcome>", e.g. "XZ:01".

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qtomo/density.hpp"
#include "qtomo/random.hpp"

namespace qtomo {

namespace detail {

inline Eigen::Matrix2cd pauli_matrix(int which) {
  const Complex i1(0.0, 1.0);
  Eigen::Matrix2cd m;
  switch (which) {
    case 0: m << 1.0, 0.0, 0.0, 1.0; break;
    case 1: m << 0.0, 1.0, 1.0, 0.0; break;
    case 2: m << 0.0, -i1, i1, 0.0; break;
    case 3: m << 1.0, 0.0, 0.0, -1.0; break;
    default: throw DomainError("pauli index out of range");
  }
  return m;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

/// Eigenstate of X (basis 0), Y (1) or Z (2); outcome 0 is the +1 eigenstate.
inline Vector cube_ket(int basis, int outcome) {
  const double r = 1.0 / std::sqrt(2.0);
  const Complex i1(0.0, 1.0);
  const double sign = outcome == 0 ? 1.0 : -1.0;
  Vector v(2);
  switch (basis) {
    case 0: v << r, sign * r; break;
    case 1: v << r, sign * r * i1; break;
    case 2:
      if (outcome == 0) {
        v << 1.0, 0.0;
      } else {
        v << 0.0, 1.0;
      }
      break;
    default: throw DomainError("cube basis index out of range");
  }
  return v;
}

inline constexpr char kBasisLetters[3] = {'X', 'Y', 'Z'};

inline std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace detail

/// The 4^n tensor products of {I, X, Y, Z}; index digits in base 4, qubit 0
/// most significant. Tr(G_a G_b) = 2^n delta_ab.
inline std::vector<Matrix> pauli_basis(int num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxQubits) throw DomainError("qubit count out of range");
  std::vector<Matrix> out;
  const std::size_t count = detail::ipow(4, num_qubits);
  out.reserve(count);
  for (std::size_t a = 0; a < count; ++a) {
    Matrix m = Matrix::Identity(1, 1);
    for (int q = num_qubits - 1; q >= 0; --q) {
      const int digit = static_cast<int>((a / detail::ipow(4, q)) % 4);
      m = detail::kron(m, Matrix(detail::pauli_matrix(digit)));
    }
    out.push_back(std::move(m));
  }
  return out;
}

struct Projector {
  std::string label;
  Vector ket;
};

/// A group of projectors that together resolve the identity. `bases` holds the
/// per-qubit cube basis (0 = X, 1 = Y, 2 = Z) when the setting is a cube
/// setting with all 2^n outcomes in canonical order, and is empty otherwise.
struct MeasurementSetting {
  std::string label;
  std::vector<std::size_t> projectors;
  std::vector<int> bases;
};

class ProjectorSet {
 public:
  ProjectorSet(int num_qubits, std::vector<Projector> projectors,
               std::vector<MeasurementSetting> settings, double tol = 1e-10)
      : n_(num_qubits), projectors_(std::move(projectors)), settings_(std::move(settings)) {
    validate(tol);
    index_labels();
  }

  /// All 3^n cube settings (eigenbases of X, Y, Z on each qubit), 2^n
  /// outcomes each.
  static ProjectorSet cube(int num_qubits) { return cube_subset(num_qubits, all_cube_settings(num_qubits)); }

  /// Cube projectors for the listed setting labels only.
  static ProjectorSet cube_subset(int num_qubits, const std::vector<std::string>& setting_labels) {
    if (num_qubits < 1 || num_qubits > kMaxQubits) throw DomainError("qubit count out of range");
    const auto d = static_cast<std::size_t>(dimension_of(num_qubits));
    std::vector<Projector> projectors;
    std::vector<MeasurementSetting> settings;
    for (const std::string& label : setting_labels) {
      auto bases = parse_cube_setting(num_qubits, label);
      if (!bases) throw DomainError("not a cube setting label: '" + label + "'");
      MeasurementSetting setting{label, {}, *bases};
      for (std::size_t o = 0; o < d; ++o) {
        Vector ket = Vector::Ones(1);
        std::string outcome(static_cast<std::size_t>(num_qubits), '0');
        for (int q = 0; q < num_qubits; ++q) {
          const int bit = static_cast<int>((o >> (num_qubits - 1 - q)) & 1U);
          outcome[static_cast<std::size_t>(q)] = bit ? '1' : '0';
          ket = detail::kron(ket, detail::cube_ket((*bases)[static_cast<std::size_t>(q)], bit));
        }
        setting.projectors.push_back(projectors.size());
        projectors.push_back({label + ":" + outcome, std::move(ket)});
      }
      settings.push_back(std::move(setting));
    }
    return ProjectorSet(num_qubits, std::move(projectors), std::move(settings));
  }

  static std::vector<std::string> all_cube_settings(int num_qubits) {
    std::vector<std::string> labels;
    const std::size_t count = detail::ipow(3, num_qubits);
    for (std::size_t s = 0; s < count; ++s) {
      std::string label(static_cast<std::size_t>(num_qubits), 'X');
      std::size_t rest = s;
      for (int q = num_qubits - 1; q >= 0; --q) {
        label[static_cast<std::size_t>(q)] = detail::kBasisLetters[rest % 3];
        rest /= 3;
      }
      labels.push_back(std::move(label));
    }
    return labels;
  }

  static std::optional<std::vector<int>> parse_cube_setting(int num_qubits, const std::string& label) {
    if (label.size() != static_cast<std::size_t>(num_qubits)) return std::nullopt;
    std::vector<int> bases;
    for (char c : label) {
      switch (c) {
        case 'X': case 'x': bases.push_back(0); break;
        case 'Y': case 'y': bases.push_back(1); break;
        case 'Z': case 'z': bases.push_back(2); break;
        default: return std::nullopt;
      }
    }
    return bases;
  }

  int num_qubits() const noexcept { return n_; }
  Eigen::Index dim() const noexcept { return dimension_of(n_); }
  std::size_t size() const noexcept { return projectors_.size(); }
  const std::vector<Projector>& projectors() const noexcept { return projectors_; }
  const std::vector<MeasurementSetting>& settings() const noexcept { return settings_; }
  const Projector& operator[](std::size_t j) const { return projectors_.at(j); }

  bool all_cube() const {
    for (const auto& s : settings_) {
      if (s.bases.empty()) return false;
    }
    return !settings_.empty();
  }

  std::optional<std::size_t> find(const std::string& label) const {
    auto it = by_label_.find(label);
    if (it == by_label_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::size_t> find_setting(const std::string& label) const {
    for (std::size_t s = 0; s < settings_.size(); ++s) {
      if (settings_[s].label == label) return s;
    }
    return std::nullopt;
  }

  /// Kets as columns of a 2^n x J matrix.
  const Matrix& ket_matrix() const noexcept { return kets_; }

 private:
  void validate(double tol) {
    if (n_ < 1 || n_ > kMaxQubits) throw DomainError("qubit count out of range");
    const Eigen::Index d = dimension_of(n_);
    for (const auto& p : projectors_) {
      if (p.ket.size() != d) throw DomainError("projector '" + p.label + "' has wrong dimension");
      if (std::abs(p.ket.norm() - 1.0) > 1e-12) throw DomainError("projector '" + p.label + "' is not normalized");
    }
    std::vector<int> owner(projectors_.size(), 0);
    for (const auto& s : settings_) {
      Matrix sum = Matrix::Zero(d, d);
      for (std::size_t j : s.projectors) {
        if (j >= projectors_.size()) throw DomainError("setting '" + s.label + "' references a missing projector");
        ++owner[j];
        sum += projectors_[j].ket * projectors_[j].ket.adjoint();
      }
      if ((sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > tol) {
        throw DomainError("setting '" + s.label + "' does not resolve the identity");
      }
    }
    for (int c : owner) {
      if (c != 1) throw DomainError("every projector must belong to exactly one setting");
    }
    kets_.resize(d, static_cast<Eigen::Index>(projectors_.size()));
    for (std::size_t j = 0; j < projectors_.size(); ++j) {
      kets_.col(static_cast<Eigen::Index>(j)) = projectors_[j].ket;
    }
  }

  void index_labels() {
    for (std::size_t j = 0; j < projectors_.size(); ++j) by_label_.emplace(projectors_[j].label, j);
  }

  int n_;
  std::vector<Projector> projectors_;
  std::vector<MeasurementSetting> settings_;
  std::unordered_map<std::string, std::size_t> by_label_;
  Matrix kets_;
};

/// <m_j| rho |m_j> for every projector, clamped to [0, 1].
inline RealVector born_probabilities(const DensityMatrix& state, const ProjectorSet& ps) {
  if (state.dim() != ps.dim()) throw DomainError("born_probabilities: dimension mismatch");
  const Matrix& kets = ps.ket_matrix();
  const Matrix rho_kets = state.matrix() * kets;
  RealVector p(kets.cols());
  for (Eigen::Index j = 0; j < kets.cols(); ++j) {
    p(j) = std::clamp(kets.col(j).dot(rho_kets.col(j)).real(), 0.0, 1.0);
  }
  return p;
}

enum class NoiseModel { gaussian, multinomial };

inline const char* to_string(NoiseModel m) {
  return m == NoiseModel::gaussian ? "gaussian" : "multinomial";
}

inline NoiseModel parse_noise_model(const std::string& s) {
  if (s == "gaussian") return NoiseModel::gaussian;
  if (s == "multinomial") return NoiseModel::multinomial;
  throw ConfigError("unknown noise model '" + s + "' (expected gaussian|multinomial)");
}

/// Observed data for a projector set: raw counts, per-setting normalized
/// probabilities and per-setting shot numbers.
class CountRecord {
 public:
  CountRecord(std::shared_ptr<const ProjectorSet> ps, RealVector counts,
              std::vector<double> shots)
      : ps_(std::move(ps)), counts_(std::move(counts)), shots_(std::move(shots)) {
    if (!ps_) throw DomainError("count record without projector set");
    if (counts_.size() != static_cast<Eigen::Index>(ps_->size())) throw DomainError("count vector size mismatch");
    if (shots_.size() != ps_->settings().size()) throw DomainError("shots vector size mismatch");
    probabilities_.resize(counts_.size());
    const auto& settings = ps_->settings();
    for (std::size_t s = 0; s < settings.size(); ++s) {
      double total = 0.0;
      for (std::size_t j : settings[s].projectors) {
        const auto ji = static_cast<Eigen::Index>(j);
        if (!(counts_(ji) >= 0.0)) throw DomainError("negative or NaN count in setting '" + settings[s].label + "'");
        total += counts_(ji);
      }
      if (!(total > 0.0)) throw DomainError("setting '" + settings[s].label + "' has no counts");
      for (std::size_t j : settings[s].projectors) {
        const auto ji = static_cast<Eigen::Index>(j);
        probabilities_(ji) = counts_(ji) / total;
      }
    }
  }

  /// Record whose counts equal `probabilities * shots`.
  static CountRecord from_probabilities(std::shared_ptr<const ProjectorSet> ps,
                                        const RealVector& probabilities, double shots_per_setting) {
    const std::size_t settings = ps->settings().size();
    return CountRecord(std::move(ps), probabilities * shots_per_setting,
                       std::vector<double>(settings, shots_per_setting));
  }

  const ProjectorSet& projector_set() const noexcept { return *ps_; }
  const std::shared_ptr<const ProjectorSet>& projector_set_ptr() const noexcept { return ps_; }
  int num_qubits() const noexcept { return ps_->num_qubits(); }
  const RealVector& counts() const noexcept { return counts_; }
  const RealVector& probabilities() const noexcept { return probabilities_; }
  const std::vector<double>& shots() const noexcept { return shots_; }

  double total_counts() const {
    double n = 0.0;
    for (double s : shots_) n += s;
    return n;
  }

 private:
  std::shared_ptr<const ProjectorSet> ps_;
  RealVector counts_;
  RealVector probabilities_;
  std::vector<double> shots_;
};

/// Finite-count data for `state`. Gaussian model: each outcome probability is
/// perturbed by Normal(0, sqrt(p(1-p)/S)), clipped to [0, 1] and renormalized
/// within its setting. Multinomial model: S is rounded to an integer and the
/// outcomes of each setting are drawn exactly.
inline CountRecord simulate_counts(const DensityMatrix& state, std::shared_ptr<const ProjectorSet> ps,
                                   double shots_per_setting, std::uint64_t seed,
                                   NoiseModel model = NoiseModel::gaussian) {
  if (!(shots_per_setting >= 1.0)) throw DomainError("shots_per_setting must be >= 1");
  const RealVector exact = born_probabilities(state, *ps);
  RealVector counts(exact.size());
  Rng rng(derive_seed(seed, {3}));
  const auto& settings = ps->settings();
  std::vector<double> shots(settings.size(), shots_per_setting);

  if (model == NoiseModel::gaussian) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (const auto& setting : settings) {
      double total = 0.0;
      for (std::size_t j : setting.projectors) {
        const auto ji = static_cast<Eigen::Index>(j);
        const double p = exact(ji);
        const double sigma = std::sqrt(std::max(0.0, p * (1.0 - p)) / shots_per_setting);
        const double g = gauss(rng);
        counts(ji) = std::clamp(p + sigma * g, 0.0, 1.0);
        total += counts(ji);
      }
      for (std::size_t j : setting.projectors) {
        const auto ji = static_cast<Eigen::Index>(j);
        counts(ji) = total > 0.0 ? counts(ji) / total * shots_per_setting : exact(ji) * shots_per_setting;
      }
    }
  } else {
    const auto n_shots = static_cast<long long>(std::llround(shots_per_setting));
    std::fill(shots.begin(), shots.end(), static_cast<double>(n_shots));
    for (const auto& setting : settings) {
      long long remaining = n_shots;
      double mass = 1.0;
      for (std::size_t k = 0; k < setting.projectors.size(); ++k) {
        const auto ji = static_cast<Eigen::Index>(setting.projectors[k]);
        long long drawn = 0;
        if (k + 1 == setting.projectors.size()) {
          drawn = remaining;
        } else if (remaining > 0 && mass > 0.0) {
          const double q = std::clamp(exact(ji) / mass, 0.0, 1.0);
          std::binomial_distribution<long long> binom(remaining, q);
          drawn = binom(rng);
        }
        counts(ji) = static_cast<double>(drawn);
        remaining -= drawn;
        mass -= exact(ji);
      }
    }
  }
  return CountRecord(std::move(ps), std::move(counts), std::move(shots));
}

}  // namespace qtomo
