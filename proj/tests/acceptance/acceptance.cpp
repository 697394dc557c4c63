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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/support.hpp"

namespace {

using namespace qtomo;
using bench::Algorithm;
using bench::ExperimentConfig;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

std::string scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "qtomo_acceptance";
  std::filesystem::create_directories(dir);
  return dir.string();
}

// Physical outputs and EO bookkeeping on random non-physical spectra.
Verdict criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(derive_seed(1, {0}));
  double worst_min_eig = std::numeric_limits<double>::infinity();
  double worst_trace = 0.0;
  double worst_balance = 0.0;
  int cases = 0;
  for (int n = 2; n <= 5; ++n) {
    for (int k = 0; k < 2500; ++k) {
      const RealVector values = testing::random_nonphysical_values(dimension_of(n), rng);
      const Spectrum s = testing::spectrum_with_random_vectors(values, derive_seed(1, {1, static_cast<std::uint64_t>(n),
                                                                                         static_cast<std::uint64_t>(k)}));
      const CorrectionReport sgs = sgs_correct(s);
      const CorrectionReport eo = eo_correct(s);
      for (const CorrectionReport* r : {&sgs, &eo}) {
        worst_min_eig = std::min(worst_min_eig, r->output.min_eigenvalue());
        worst_trace = std::max(worst_trace, std::abs(r->output.trace().real() - 1.0));
      }
      for (const EoRound& round : eo.rounds) {
        worst_balance = std::max(worst_balance, std::abs(round.correction_sum - round.removed_total));
      }
      ++cases;
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_min_eig >= -1e-10 && worst_trace <= 1e-9 && worst_balance <= 1e-12 && secs < 60.0;
  return {pass, std::to_string(cases) + " spectra, min eigenvalue " + fmt(worst_min_eig) + ", max |tr-1| " +
                    fmt(worst_trace) + ", max EO balance error " + fmt(worst_balance) + ", " + fmt(secs) + " s"};
}

// Noiseless round trip through linear, MLE and iMLE.
Verdict criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_at = "none";
  for (int n = 2; n <= 4; ++n) {
    auto ps = std::make_shared<const ProjectorSet>(ProjectorSet::cube(n));
    const LinearReconstructor lin(ps);
    for (std::uint64_t k = 0; k < 3; ++k) {
      StateRecipe recipe;
      recipe.num_qubits = n;
      recipe.seed = derive_seed(2, {static_cast<std::uint64_t>(n), k});
      Rng rng(recipe.seed);
      recipe.purity_param = std::uniform_real_distribution<double>(0.5, 0.95)(rng);
      const DensityMatrix truth = mixed_state(recipe);
      const CountRecord cr = CountRecord::from_probabilities(ps, born_probabilities(truth, *ps), 1e12);
      const DensityMatrix linear = lin.reconstruct(cr.probabilities());
      const DensityMatrix eo = eo_correct(eigendecompose(DensityMatrix(n, linear.hermitian_part()))).output;
      const std::pair<const char*, double> results[] = {
          {"linear", infidelity(truth, linear)},
          {"mle", infidelity(truth, mle_correct(cr, eo).output)},
          {"imle", infidelity(truth, imle_correct(cr, DensityMatrix::maximally_mixed(n)).output)},
          {"mle from I/d", n <= 3 ? infidelity(truth, mle_correct(cr, DensityMatrix::maximally_mixed(n)).output) : 0.0},
      };
      for (const auto& [name, inf] : results) {
        if (!(inf <= worst)) {
          worst = inf;
          worst_at = std::string(name) + " n=" + std::to_string(n);
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && secs < 120.0,
          "max infidelity " + fmt(worst) + " (" + worst_at + "), " + fmt(secs) + " s"};
}

// Ordering MLE <= EO <= SGS at the reference setting.
Verdict criterion3() {
  ExperimentConfig cfg;
  cfg.trials = 300;
  cfg.counts = {16000};
  cfg.purity = 0.94;
  cfg.algorithms = {Algorithm::sgs, Algorithm::eo, Algorithm::mle};
  const bench::SweepResult r = bench::run_counts_sweep(cfg);
  std::vector<double> sgs_minus_eo;
  std::vector<double> eo_minus_mle;
  for (const auto& t : r.points.front().trials) {
    const auto* s = t.find(Algorithm::sgs);
    const auto* e = t.find(Algorithm::eo);
    const auto* m = t.find(Algorithm::mle);
    if (!(s && e && m && s->ok && e->ok && m->ok)) continue;
    sgs_minus_eo.push_back(s->infidelity - e->infidelity);
    eo_minus_mle.push_back(e->infidelity - m->infidelity);
  }
  const stats::Summary a = stats::summarize(sgs_minus_eo);
  const stats::Summary b = stats::summarize(eo_minus_mle);
  const double confidence = stats::bootstrap_positive_fraction(sgs_minus_eo, 10000, derive_seed(3, {0}));
  const bool pass = a.count >= 200 && a.mean > a.standard_error() && b.mean > b.standard_error() && confidence >= 0.95;
  return {pass, "trials " + std::to_string(a.count) + ", SGS " + fmt(r.row(0, Algorithm::sgs)->infidelity.mean) +
                    ", EO " + fmt(r.row(0, Algorithm::eo)->infidelity.mean) + ", MLE " +
                    fmt(r.row(0, Algorithm::mle)->infidelity.mean) + ", SGS-EO " + fmt(a.mean) + " (SE " +
                    fmt(a.standard_error()) + "), EO-MLE " + fmt(b.mean) + " (SE " + fmt(b.standard_error()) +
                    "), bootstrap " + fmt(confidence)};
}

// Shot-noise scaling of the mean infidelity.
Verdict criterion4() {
  ExperimentConfig cfg;
  cfg.trials = 1000;
  cfg.counts = {1e3, 3.16e3, 1e4, 3.16e4, 1e5, 3.16e5, 1e6};
  cfg.algorithms = {Algorithm::sgs, Algorithm::eo};
  const bench::SweepResult r = bench::run_counts_sweep(cfg);
  bool pass = true;
  std::string detail;
  for (Algorithm a : cfg.algorithms) {
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < cfg.counts.size(); ++i) {
      x.push_back(std::log(cfg.counts[i]));
      y.push_back(std::log(r.row(i, a)->infidelity.mean));
    }
    const double slope = stats::ols_slope(x, y);
    pass = pass && std::abs(slope + 0.5) <= 0.15;
    detail += std::string(detail.empty() ? "" : ", ") + bench::to_string(a) + " slope " + fmt(slope);
  }
  return {pass, detail};
}

// Purity at which each algorithm is worst.
Verdict criterion5() {
  ExperimentConfig cfg;
  cfg.trials = 100;
  cfg.total_counts = 16000;
  cfg.algorithms = {Algorithm::sgs, Algorithm::eo, Algorithm::mle, Algorithm::imle};
  const bench::SweepResult r = bench::run_purity_sweep(cfg);
  bool pass = true;
  std::string detail;
  for (Algorithm a : cfg.algorithms) {
    std::size_t peak = 0;
    for (std::size_t i = 1; i < cfg.purities.size(); ++i) {
      if (r.row(i, a)->infidelity.mean > r.row(peak, a)->infidelity.mean) peak = i;
    }
    const double at = cfg.purities[peak];
    pass = pass && at >= 0.8 && at <= 0.97;
    detail += std::string(detail.empty() ? "" : ", ") + bench::to_string(a) + " peaks at " + fmt(at);
  }
  return {pass, detail};
}

// Run-time relations.
Verdict criterion6() {
  ExperimentConfig cfg;
  cfg.trials = 1;
  cfg.min_qubits = 2;
  cfg.max_qubits = 5;
  cfg.timing_instances = 20;
  cfg.algorithms = {Algorithm::sgs, Algorithm::eo, Algorithm::mle};
  const bench::QubitSweepResult r = bench::run_qubit_sweep(cfg);
  bool pass = true;
  double worst_gap = 0.0;
  std::vector<double> n_axis;
  std::vector<double> log_steps;
  for (int n = 2; n <= 5; ++n) {
    const double sgs = r.timing_of(n, "sgs");
    const double eo = r.timing_of(n, "eo");
    worst_gap = std::max(worst_gap, std::abs(eo - sgs) / sgs);
    n_axis.push_back(n * std::log(4.0));
    log_steps.push_back(std::log(r.timing_of(n, "eo_steps")));
  }
  const double ratio = r.timing_of(3, "mle") / r.timing_of(3, "eo");
  const double exponent = stats::ols_slope(n_axis, log_steps);
  pass = worst_gap <= 0.15 && ratio >= 100.0 && exponent <= 1.0;
  return {pass, "max |EO-SGS|/SGS " + fmt(worst_gap) + ", MLE/EO at n=3 " + fmt(ratio) +
                    ", EO steps grow as 4^(" + fmt(exponent) + " n)"};
}

// Fit curve properties.
Verdict criterion7() {
  const FitCurve f = FitCurve::reference();
  const bool zero_at_one = f(1.0) == 0.0;
  double worst_odd = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double t = k / 100.0;
    worst_odd = std::max(worst_odd, std::abs(f.odd_part(t) + f.odd_part(-t)));
  }
  double independent = 0.0;
  for (std::size_t k = 0; k < f.coefficients.size(); ++k) {
    independent += f.coefficients[k] * std::pow(0.8 - 1.0, static_cast<double>(2 * k + 1));
  }
  const double mismatch = std::abs(eval_fit(f, 0.8) - independent);
  return {zero_at_one && worst_odd == 0.0 && mismatch <= 1e-12,
          std::string("F(1)=") + fmt(f(1.0)) + ", max |F(1+t)+F(1-t)| " + fmt(worst_odd) + ", F(0.8)=" +
              fmt(eval_fit(f, 0.8)) + " vs " + fmt(independent)};
}

struct Instance {
  Spectrum spectrum;
  std::shared_ptr<const ProjectorSet> projectors;
};

std::vector<Instance> nonphysical_instances(int n, int count, std::uint64_t seed, int want_positive = 0) {
  auto ps = std::make_shared<const ProjectorSet>(ProjectorSet::cube(n));
  const LinearReconstructor lin(ps);
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.0);
  std::vector<Instance> out;
  for (std::uint64_t t = 0; static_cast<int>(out.size()) < count && t < 100000; ++t) {
    StateRecipe r;
    r.num_qubits = n;
    r.seed = derive_seed(seed, {t});
    r.purity_param = solve_purity_param(r, u(rng));
    const CountRecord cr = simulate_counts(rank_deficient_state(r), ps, std::pow(4.0, n) * 1000 / std::pow(3.0, n),
                                           derive_seed(seed, {t, 1}));
    Spectrum s = eigendecompose(lin.reconstruct(cr.probabilities()));
    if (!s.has_negative()) continue;
    if (want_positive > 0 && s.positive_count() != want_positive) continue;
    out.push_back({std::move(s), ps});
  }
  return out;
}

// Distance optimizer quality and the derived profile.
Verdict criterion8() {
  int better = 0;
  const auto two = nonphysical_instances(2, 100, derive_seed(8, {0}));
  for (const Instance& in : two) {
    const DistanceResult r = optimize_distances(in.spectrum, *in.projectors);
    if (r.cost < r.start_cost) ++better;
  }

  double worst_excess = 0.0;
  for (const Instance& in : nonphysical_instances(2, 20, derive_seed(8, {1}), 3)) {
    const DistanceProblem p(in.spectrum, *in.projectors);
    const RealVector& v = in.spectrum.eigenvalues;
    const double kept = v.head(3).sum() + p.negative_sum();
    double grid = std::numeric_limits<double>::infinity();
    RealVector block(3);
    for (int a = 0; a * 1e-3 <= kept; ++a) {
      for (int b = 0; (a + b) * 1e-3 <= kept; ++b) {
        block << a * 1e-3 - v(0), b * 1e-3 - v(1), kept - (a + b) * 1e-3 - v(2);
        grid = std::min(grid, p.cost(block));
      }
    }
    const double cost = optimize_distances(in.spectrum, *in.projectors).cost;
    worst_excess = std::max(worst_excess, cost / grid - 1.0);
  }

  ExperimentConfig cfg;
  cfg.num_qubits = 3;
  cfg.trials = 400;
  cfg.fit_terms = 3;
  const bench::DeriveResult d = bench::run_derive_fit(cfg);
  std::vector<double> profile;
  std::vector<double> reference;
  for (const auto& bin : d.profile.bins) {
    const double x = 2.0 * bin.scaled_index;
    if (x < 0.1 || x > 1.0) continue;
    profile.push_back(bin.mean);
    reference.push_back(FitCurve::reference()(x));
  }
  const double corr = stats::pearson(profile, reference);
  const double first = d.profile.bins.front().mean;

  const bool pass = two.size() == 100 && better >= 90 && worst_excess <= 0.01 && corr >= 0.9 && std::abs(first) < 0.05;
  return {pass, "beats SGS spreading " + std::to_string(better) + "/100, worst excess over grid " +
                    fmt(100.0 * worst_excess) + "%, n=3 profile Pearson " + fmt(corr) + " over " +
                    std::to_string(profile.size()) + " bins, mean scaled d_1 " + fmt(first)};
}

// File ingestion through the command line agrees with the in-memory path.
Verdict criterion9() {
  const std::string dir = scratch_dir();
  Vector bell = Vector::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  const DensityMatrix reference(2, 0.96 * DensityMatrix::pure(bell).matrix() +
                                       0.04 * DensityMatrix::maximally_mixed(2).matrix());
  const std::string ref_path = dir + "/bell_reference.json";
  io::write_density(ref_path, reference);
  auto ps = std::make_shared<const ProjectorSet>(ProjectorSet::cube(2));
  const double shots = std::round(16000.0 / 9.0);
  const int files = 100;
  const Algorithm algos[] = {Algorithm::sgs, Algorithm::eo, Algorithm::imle};
  std::map<Algorithm, std::vector<double>> via_cli;
  std::map<Algorithm, std::vector<double>> in_memory;
  const ExperimentConfig cfg;
  int cli_failures = 0;
  for (int k = 0; k < files; ++k) {
    const auto kk = static_cast<std::uint64_t>(k);
    const CountRecord written = simulate_counts(reference, ps, shots, derive_seed(9, {0, kk}), NoiseModel::multinomial);
    const std::string counts_path = dir + "/bell_counts_" + std::to_string(k) + ".json";
    const std::string out = dir + "/bell_out_" + std::to_string(k);
    io::write_count_record(counts_path, written);
    const std::string cmd = std::string(QTOMO_CLI_PATH) + " --algos sgs,eo,imle --out " + out + " reconstruct " +
                            counts_path + " --reference " + ref_path + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      ++cli_failures;
      continue;
    }
    std::ifstream in(out + ".json");
    const io::Json report = io::Json::parse(in);
    for (Algorithm a : algos) via_cli[a].push_back(report["algorithms"][bench::to_string(a)]["infidelity"].get<double>());

    const CountRecord fresh = simulate_counts(reference, ps, shots, derive_seed(9, {1, kk}), NoiseModel::multinomial);
    const bench::ReconstructReport rep = bench::reconstruct_record(cfg, fresh, reference);
    for (const auto& o : rep.outcomes) {
      if (o.ok) in_memory[o.algorithm].push_back(o.infidelity);
    }
  }
  bool pass = cli_failures == 0;
  std::string detail = "cli failures " + std::to_string(cli_failures);
  for (Algorithm a : algos) {
    const stats::Interval ci = stats::mean_interval95(stats::summarize(via_cli[a]));
    const stats::Interval cm = stats::mean_interval95(stats::summarize(in_memory[a]));
    pass = pass && ci.overlaps(cm);
    detail += std::string(", ") + bench::to_string(a) + " file [" + fmt(ci.lo) + ", " + fmt(ci.hi) + "] memory [" +
              fmt(cm.lo) + ", " + fmt(cm.hi) + "]";
  }
  return {pass, detail};
}

}  // namespace

int main() {
  const std::vector<std::function<Verdict()>> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                          criterion6, criterion7, criterion8, criterion9};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::cout << "Criterion " << k + 1 << ": " << (v.pass ? "PASS" : "FAIL") << " (" << v.detail << "; "
              << fmt(seconds_since(t0)) << " s)" << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
