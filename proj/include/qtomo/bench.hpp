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

// End-to-end experiments: simulated sweeps over total counts, purity and
// qubit number, curve derivation, and reconstruction of ingested count files.
//
// Result CSVs hold only seed-determined quantities, so a fixed config gives
// identical files for any thread count. Wall times go to separate timing
// files.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qtomo/correction.hpp"
#include "qtomo/density.hpp"
#include "qtomo/eo_derivation.hpp"
#include "qtomo/fit_curve.hpp"
#include "qtomo/io.hpp"
#include "qtomo/linear_reconstruction.hpp"
#include "qtomo/measurement.hpp"
#include "qtomo/random.hpp"
#include "qtomo/state_gen.hpp"
#include "qtomo/stats.hpp"

namespace qtomo::bench {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kAmodConvention =
    "signed: a_mod = sum of the negative eigenvalues (<= 0); EO corrections sum to a_mod, preserving the trace";
inline constexpr const char* kCountsConvention =
    "N is the total over all cube settings; shots per setting S = N / 3^n";

enum class Algorithm { linear, sgs, eo, mle, imle };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::linear, Algorithm::sgs, Algorithm::eo, Algorithm::mle,
                                               Algorithm::imle};

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::linear: return "linear";
    case Algorithm::sgs: return "sgs";
    case Algorithm::eo: return "eo";
    case Algorithm::mle: return "mle";
    case Algorithm::imle: return "imle";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  for (Algorithm a : kAllAlgorithms) {
    if (s == to_string(a)) return a;
  }
  throw ConfigError("unknown algorithm '" + s + "' (expected linear|sgs|eo|mle|imle)");
}

/// Comma-separated list, order and duplicates normalized.
inline std::vector<Algorithm> parse_algorithms(const std::string& csv) {
  std::vector<bool> on(std::size(kAllAlgorithms), false);
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) on[static_cast<std::size_t>(parse_algorithm(item))] = true;
  }
  std::vector<Algorithm> out;
  for (Algorithm a : kAllAlgorithms) {
    if (on[static_cast<std::size_t>(a)]) out.push_back(a);
  }
  return out;
}

enum class ExperimentKind { counts_sweep, purity_sweep, qubit_sweep, derive_fit, reconstruct };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::counts_sweep: return "sweep-counts";
    case ExperimentKind::purity_sweep: return "sweep-purity";
    case ExperimentKind::qubit_sweep: return "sweep-qubits";
    case ExperimentKind::derive_fit: return "derive-fit";
    case ExperimentKind::reconstruct: return "reconstruct";
  }
  return "?";
}

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::counts_sweep;
  int num_qubits = 2;
  int trials = 200;
  std::vector<double> counts = {1e3, 3.16e3, 1e4, 3.16e4, 1e5, 3.16e5, 1e6};
  std::vector<double> purities = {0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.94, 0.97, 0.99, 1.0};
  double purity = 0.94;
  double total_counts = 16000;  // purity sweep
  int min_qubits = 2;
  int max_qubits = 5;
  int mle_max_qubits = 3;
  int imle_max_qubits = 3;
  double counts_per_element = 1000;  // qubit sweep and derive-fit: N = 4^n * this
  double zero_fraction = 0.25;
  double rotation_strength = 0.1;
  std::vector<Algorithm> algorithms = {Algorithm::linear, Algorithm::sgs, Algorithm::eo, Algorithm::mle,
                                       Algorithm::imle};
  std::uint64_t seed = 20240601;
  std::string out = "qtomo_out";
  std::string fit_curve_path;
  FitCurve curve = FitCurve::reference();
  int threads = 1;
  NoiseModel noise = NoiseModel::gaussian;
  // derive-fit
  double purity_min = 0.5;
  double purity_max = 1.0;
  int bins = 64;
  int fit_terms = 6;
  // reconstruct
  std::string counts_path;
  std::string reference_path;
  // timing runs in the qubit sweep
  int timing_instances = 20;
  double timing_min_seconds = 2e-3;

  void validate() const {
    if (algorithms.empty()) throw ConfigError("at least one algorithm is required");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    if (num_qubits < 1 || num_qubits > kMaxQubits) throw ConfigError("qubits out of range");
    for (double n : counts) {
      if (!(n > 0.0)) throw ConfigError("counts must be > 0");
    }
    if (!(total_counts > 0.0) || !(counts_per_element > 0.0)) throw ConfigError("counts must be > 0");
    for (double p : purities) {
      if (!(p > 0.0 && p <= 1.0)) throw ConfigError("purities must lie in (0, 1]");
    }
    if (!(purity > 0.0 && purity <= 1.0)) throw ConfigError("purity must lie in (0, 1]");
    if (!(purity_min > 0.0 && purity_min <= purity_max && purity_max <= 1.0)) {
      throw ConfigError("purity range must satisfy 0 < min <= max <= 1");
    }
    if (min_qubits < 1 || max_qubits < min_qubits || max_qubits > kMaxQubits) throw ConfigError("bad qubit range");
    if (!(zero_fraction >= 0.0 && zero_fraction < 1.0)) throw ConfigError("zero_fraction must lie in [0, 1)");
    if (!(rotation_strength >= 0.0)) throw ConfigError("rotation_strength must be >= 0");
    if (bins < 1 || fit_terms < 1) throw ConfigError("bins and fit_terms must be >= 1");
    if (kind == ExperimentKind::reconstruct && counts_path.empty()) throw ConfigError("reconstruct needs a counts file");
  }

  bool runs(Algorithm a) const { return std::find(algorithms.begin(), algorithms.end(), a) != algorithms.end(); }
};

inline io::Json to_json(const ExperimentConfig& c) {
  io::Json algos = io::Json::array();
  for (Algorithm a : c.algorithms) algos.push_back(to_string(a));
  return io::Json{{"experiment", to_string(c.kind)},
                  {"qubits", c.num_qubits},
                  {"trials", c.trials},
                  {"counts", c.counts},
                  {"purities", c.purities},
                  {"purity", c.purity},
                  {"total_counts", c.total_counts},
                  {"min_qubits", c.min_qubits},
                  {"max_qubits", c.max_qubits},
                  {"mle_max_qubits", c.mle_max_qubits},
                  {"imle_max_qubits", c.imle_max_qubits},
                  {"counts_per_element", c.counts_per_element},
                  {"zero_fraction", c.zero_fraction},
                  {"rotation_strength", c.rotation_strength},
                  {"algos", algos},
                  {"seed", c.seed},
                  {"out", c.out},
                  {"fit_curve", c.fit_curve_path.empty() ? io::Json("builtin reference") : io::Json(c.fit_curve_path)},
                  {"fit_curve_coefficients", c.curve.coefficients},
                  {"threads", c.threads},
                  {"noise", to_string(c.noise)},
                  {"purity_min", c.purity_min},
                  {"purity_max", c.purity_max},
                  {"bins", c.bins},
                  {"fit_terms", c.fit_terms},
                  {"counts_file", c.counts_path},
                  {"reference", c.reference_path}};
}

// ---------------------------------------------------------------------------
// trials

struct AlgorithmOutcome {
  Algorithm algorithm = Algorithm::linear;
  bool ok = false;
  double infidelity = 0.0;
  double purity = 0.0;
  int iterations = 0;
  double seconds = 0.0;  // the correction itself (reconstruction for linear)
  std::string error;
};

struct TrialResult {
  std::uint64_t seed = 0;
  double truth_purity = 0.0;
  bool linear_physical = false;
  double eig_seconds = 0.0;
  std::vector<AlgorithmOutcome> outcomes;

  const AlgorithmOutcome* find(Algorithm a) const {
    for (const auto& o : outcomes) {
      if (o.algorithm == a) return &o;
    }
    return nullptr;
  }
};

/// Shared, read-only per-qubit-count resources.
struct Workspace {
  std::shared_ptr<const ProjectorSet> projectors;
  std::shared_ptr<const LinearReconstructor> linear;

  explicit Workspace(int num_qubits)
      : projectors(std::make_shared<const ProjectorSet>(ProjectorSet::cube(num_qubits))),
        linear(std::make_shared<const LinearReconstructor>(projectors)) {}
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline double cube_settings(int n) { return std::pow(3.0, n); }

}  // namespace detail

struct TrialSpec {
  int num_qubits = 2;
  double total_counts = 16000;
  double target_purity = 0.94;
  std::uint64_t state_seed = 0;
  std::uint64_t noise_seed = 0;
};

/// Corrections of an already reconstructed matrix. `truth` is optional; when
/// absent infidelities are left at zero and only purity and timing are set.
inline TrialResult correct_all(const ExperimentConfig& cfg, const CountRecord& cr, const DensityMatrix& linear,
                               double linear_seconds, const DensityMatrix* truth,
                               std::map<Algorithm, DensityMatrix>* estimates = nullptr) {
  TrialResult res;
  const int n = cr.num_qubits();
  auto score = [&](AlgorithmOutcome& o, const DensityMatrix& est) {
    o.purity = purity(est);
    if (estimates) estimates->insert_or_assign(o.algorithm, est);
    if (truth) o.infidelity = infidelity(*truth, est);
    o.ok = true;
  };

  const auto t_eig = std::chrono::steady_clock::now();
  const DensityMatrix hermitian(n, linear.hermitian_part());
  const Spectrum spectrum = eigendecompose(hermitian);
  res.eig_seconds = detail::seconds_since(t_eig);
  res.linear_physical = spectrum.eigenvalues.minCoeff() >= -Tolerances{}.physical;

  std::optional<DensityMatrix> eo_output;
  auto run_eo = [&]() -> const DensityMatrix& {
    if (!eo_output) eo_output = eo_correct(spectrum, cfg.curve).output;
    return *eo_output;
  };

  for (Algorithm a : cfg.algorithms) {
    AlgorithmOutcome o;
    o.algorithm = a;
    try {
      switch (a) {
        case Algorithm::linear:
          o.seconds = linear_seconds;
          if (!res.linear_physical) {
            o.error = "linear estimate is not physical";
            o.purity = purity(hermitian);
            if (estimates) estimates->insert_or_assign(a, hermitian);
          } else {
            score(o, hermitian);
          }
          break;
        case Algorithm::sgs: {
          const CorrectionReport r = sgs_correct(spectrum);
          o.seconds = std::chrono::duration<double>(r.wall_time).count();
          o.iterations = r.iterations;
          score(o, r.output);
          break;
        }
        case Algorithm::eo: {
          const CorrectionReport r = eo_correct(spectrum, cfg.curve);
          o.seconds = std::chrono::duration<double>(r.wall_time).count();
          o.iterations = r.iterations;
          if (!eo_output) eo_output = r.output;
          score(o, r.output);
          break;
        }
        case Algorithm::mle: {
          if (n > cfg.mle_max_qubits) continue;
          const CorrectionReport r = mle_correct(cr, run_eo());
          o.seconds = std::chrono::duration<double>(r.wall_time).count();
          o.iterations = r.iterations;
          score(o, r.output);
          if (!r.converged) o.error = "did not converge";
          break;
        }
        case Algorithm::imle: {
          if (n > cfg.imle_max_qubits) continue;
          const CorrectionReport r = imle_correct(cr, DensityMatrix::maximally_mixed(n));
          o.seconds = std::chrono::duration<double>(r.wall_time).count();
          o.iterations = r.iterations;
          score(o, r.output);
          if (!r.converged) o.error = "did not converge";
          break;
        }
      }
    } catch (const Error& e) {
      o.ok = false;
      o.error = e.what();
    }
    res.outcomes.push_back(std::move(o));
  }
  return res;
}

/// One simulated trial: state, counts, linear reconstruction, corrections.
inline TrialResult run_trial(const ExperimentConfig& cfg, const Workspace& ws, const TrialSpec& spec) {
  StateRecipe recipe;
  recipe.num_qubits = spec.num_qubits;
  recipe.zero_fraction = cfg.zero_fraction;
  recipe.rotation_strength = cfg.rotation_strength;
  recipe.seed = spec.state_seed;
  recipe.purity_param = solve_purity_param(recipe, spec.target_purity);
  const DensityMatrix truth = rank_deficient_state(recipe);
  const CountRecord cr = simulate_counts(truth, ws.projectors,
                                         spec.total_counts / detail::cube_settings(spec.num_qubits),
                                         spec.noise_seed, cfg.noise);
  const auto t0 = std::chrono::steady_clock::now();
  const DensityMatrix linear = ws.linear->reconstruct(cr.probabilities());
  const double linear_seconds = detail::seconds_since(t0);
  TrialResult res = correct_all(cfg, cr, linear, linear_seconds, &truth);
  res.seed = spec.state_seed;
  res.truth_purity = purity(truth);
  return res;
}

/// Runs `count` independent jobs on `threads` workers (0 = hardware
/// concurrency). Results land at their own index, so the reduction that
/// follows is independent of scheduling.
template <class Result>
std::vector<Result> parallel_map(int count, int threads, const std::function<Result(int)>& job) {
  std::vector<Result> out(static_cast<std::size_t>(count));
  int workers = threads == 0 ? static_cast<int>(std::max(1U, std::thread::hardware_concurrency())) : threads;
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = job(i);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int i = next++; i < count; i = next++) {
        try {
          out[static_cast<std::size_t>(i)] = job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---------------------------------------------------------------------------
// aggregation

struct PointSummary {
  std::string point_name;  // column header of the swept variable
  double point = 0.0;
  int num_qubits = 0;
  double total_counts = 0.0;
  double target_purity = 0.0;
  Algorithm algorithm = Algorithm::linear;
  stats::Summary infidelity;
  int failures = 0;
  double mean_iterations = 0.0;
  double mean_purity = 0.0;
  double physical_input_fraction = 0.0;
  double mean_seconds = 0.0;
  double mean_seconds_with_eig = 0.0;
};

struct SweepPoint {
  std::string point_name;
  double point = 0.0;
  int num_qubits = 0;
  double total_counts = 0.0;
  double target_purity = 0.0;
  std::vector<TrialResult> trials;
};

inline std::vector<PointSummary> summarize_point(const ExperimentConfig& cfg, const SweepPoint& p) {
  std::vector<PointSummary> rows;
  for (Algorithm a : cfg.algorithms) {
    if (a == Algorithm::mle && p.num_qubits > cfg.mle_max_qubits) continue;
    if (a == Algorithm::imle && p.num_qubits > cfg.imle_max_qubits) continue;
    PointSummary s;
    s.point_name = p.point_name;
    s.point = p.point;
    s.num_qubits = p.num_qubits;
    s.total_counts = p.total_counts;
    s.target_purity = p.target_purity;
    s.algorithm = a;
    std::vector<double> inf;
    double iters = 0.0;
    double pur = 0.0;
    double secs = 0.0;
    double secs_eig = 0.0;
    int physical = 0;
    for (const auto& t : p.trials) {
      if (t.linear_physical) ++physical;
      const AlgorithmOutcome* o = t.find(a);
      if (!o || !o->ok) {
        ++s.failures;
        continue;
      }
      inf.push_back(o->infidelity);
      iters += o->iterations;
      pur += o->purity;
      secs += o->seconds;
      secs_eig += o->seconds + (a == Algorithm::linear ? 0.0 : t.eig_seconds);
    }
    s.infidelity = stats::summarize(inf);
    const double k = inf.empty() ? 1.0 : static_cast<double>(inf.size());
    s.mean_iterations = iters / k;
    s.mean_purity = pur / k;
    s.mean_seconds = secs / k;
    s.mean_seconds_with_eig = secs_eig / k;
    s.physical_input_fraction = p.trials.empty() ? 0.0 : static_cast<double>(physical) / static_cast<double>(p.trials.size());
    rows.push_back(s);
  }
  return rows;
}

struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<PointSummary> rows;

  const PointSummary* row(std::size_t point_index, Algorithm a) const {
    const SweepPoint& p = points.at(point_index);
    for (const auto& r : rows) {
      if (r.algorithm == a && r.point == p.point && r.point_name == p.point_name) return &r;
    }
    return nullptr;
  }
};

inline std::string format_number(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

/// Seed-determined columns only.
inline std::string results_csv(const std::vector<PointSummary>& rows) {
  std::ostringstream ss;
  ss << "sweep,point,qubits,total_counts,target_purity,algorithm,mean,std,trials,failures,mean_iterations,"
        "mean_purity,physical_input_fraction\n";
  for (const auto& r : rows) {
    ss << r.point_name << ',' << format_number(r.point) << ',' << r.num_qubits << ',' << format_number(r.total_counts) << ','
       << format_number(r.target_purity) << ',' << to_string(r.algorithm) << ',' << format_number(r.infidelity.mean)
       << ',' << format_number(r.infidelity.stddev) << ',' << r.infidelity.count << ',' << r.failures << ','
       << format_number(r.mean_iterations) << ',' << format_number(r.mean_purity) << ','
       << format_number(r.physical_input_fraction) << '\n';
  }
  return ss.str();
}

inline std::string timing_csv(const std::vector<PointSummary>& rows) {
  std::ostringstream ss;
  ss << "sweep,point,qubits,algorithm,mean_seconds,mean_seconds_with_eig\n";
  for (const auto& r : rows) {
    ss << r.point_name << ',' << format_number(r.point) << ',' << r.num_qubits << ',' << to_string(r.algorithm) << ','
       << format_number(r.mean_seconds) << ',' << format_number(r.mean_seconds_with_eig) << '\n';
  }
  return ss.str();
}

inline io::Json sidecar(const ExperimentConfig& cfg) {
  return io::Json{{"config", to_json(cfg)},
                  {"version", kVersion},
                  {"noise_model", to_string(cfg.noise)},
                  {"noise_sigma", "sqrt(p(1-p)/S), clipped to [0,1] and renormalized per setting"},
                  {"a_mod_convention", kAmodConvention},
                  {"counts_convention", kCountsConvention},
                  {"state_model",
                   "purity-matched mixed state, floor(zero_fraction * 2^n) smallest eigenvalues zeroed"}};
}

inline void write_text(const std::string& path, const std::string& text) { io::detail::write_file(path, text); }

inline void write_sweep_outputs(const ExperimentConfig& cfg, const SweepResult& r) {
  write_text(cfg.out + ".csv", results_csv(r.rows));
  write_text(cfg.out + "_timing.csv", timing_csv(r.rows));
  write_text(cfg.out + ".json", sidecar(cfg).dump(2) + "\n");
}

namespace detail {

enum Stream : std::uint64_t { kStateStream = 101, kNoiseStream = 102, kPurityStream = 103, kTimingStream = 104 };

inline SweepPoint run_point(const ExperimentConfig& cfg, const Workspace& ws, const std::string& name, double value,
                            int n, double total, double target, std::uint64_t point_index) {
  SweepPoint p{name, value, n, total, target, {}};
  p.trials = parallel_map<TrialResult>(cfg.trials, cfg.threads, [&](int t) {
    TrialSpec spec;
    spec.num_qubits = n;
    spec.total_counts = total;
    spec.target_purity = target;
    spec.state_seed = derive_seed(cfg.seed, {kStateStream, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(t)});
    spec.noise_seed = derive_seed(cfg.seed, {kNoiseStream, static_cast<std::uint64_t>(n), point_index,
                                             static_cast<std::uint64_t>(t)});
    return run_trial(cfg, ws, spec);
  });
  return p;
}

}  // namespace detail

/// Mean infidelity per total-count value at fixed purity. The same random
/// states are reused at every N.
inline SweepResult run_counts_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const Workspace ws(cfg.num_qubits);
  SweepResult r;
  for (std::size_t i = 0; i < cfg.counts.size(); ++i) {
    r.points.push_back(detail::run_point(cfg, ws, "total_counts", cfg.counts[i], cfg.num_qubits, cfg.counts[i],
                                         cfg.purity, i));
    auto rows = summarize_point(cfg, r.points.back());
    r.rows.insert(r.rows.end(), rows.begin(), rows.end());
  }
  return r;
}

/// Mean infidelity per target purity at fixed total counts.
inline SweepResult run_purity_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const Workspace ws(cfg.num_qubits);
  SweepResult r;
  for (std::size_t i = 0; i < cfg.purities.size(); ++i) {
    r.points.push_back(detail::run_point(cfg, ws, "purity", cfg.purities[i], cfg.num_qubits, cfg.total_counts,
                                         cfg.purities[i], i));
    auto rows = summarize_point(cfg, r.points.back());
    r.rows.insert(r.rows.end(), rows.begin(), rows.end());
  }
  return r;
}

// ---------------------------------------------------------------------------
// timing

struct TimingRow {
  int num_qubits = 0;
  std::string what;  // "sgs", "eo", "eo_steps", "sgs_steps", "mle", "imle", "eig"
  double mean_seconds = 0.0;
  int instances = 0;
};

namespace detail {

/// Median over instances of the per-call time, each instance repeated until
/// `min_seconds` has elapsed.
inline double time_call(const std::function<void()>& f, double min_seconds) {
  long reps = 0;
  const auto t0 = std::chrono::steady_clock::now();
  double elapsed = 0.0;
  do {
    f();
    ++reps;
    elapsed = seconds_since(t0);
  } while (elapsed < min_seconds);
  return elapsed / static_cast<double>(reps);
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

/// Serial wall-time measurements for one qubit count on non-physical
/// instances. SGS and EO are timed with the eigendecomposition ("sgs", "eo")
/// and on the precomputed spectrum ("sgs_steps", "eo_steps"); the two are
/// interleaved per instance so drifts hit both alike.
inline std::vector<TimingRow> measure_timing(const ExperimentConfig& cfg, int n) {
  const Workspace ws(n);
  const double total = std::pow(4.0, n) * cfg.counts_per_element;
  std::map<std::string, std::vector<double>> samples;
  int found = 0;
  for (std::uint64_t t = 0; found < cfg.timing_instances && t < static_cast<std::uint64_t>(cfg.timing_instances) * 50; ++t) {
    StateRecipe recipe;
    recipe.num_qubits = n;
    recipe.zero_fraction = cfg.zero_fraction;
    recipe.rotation_strength = cfg.rotation_strength;
    recipe.seed = derive_seed(cfg.seed, {detail::kTimingStream, static_cast<std::uint64_t>(n), t});
    recipe.purity_param = solve_purity_param(recipe, cfg.purity);
    const DensityMatrix truth = rank_deficient_state(recipe);
    const CountRecord cr = simulate_counts(truth, ws.projectors, total / detail::cube_settings(n),
                                           derive_seed(recipe.seed, {1}), cfg.noise);
    const DensityMatrix linear = ws.linear->reconstruct(cr.probabilities());
    const DensityMatrix herm(n, linear.hermitian_part());
    const Spectrum spectrum = eigendecompose(herm);
    if (!spectrum.has_negative()) continue;
    ++found;
    const double budget = cfg.timing_min_seconds;
    volatile double sink = 0.0;
    auto sgs_full = [&] { sink = sink + sgs_correct(eigendecompose(herm)).output.matrix()(0, 0).real(); };
    auto eo_full = [&] { sink = sink + eo_correct(eigendecompose(herm), cfg.curve).output.matrix()(0, 0).real(); };
    // alternate order between instances
    if (found % 2) {
      samples["sgs"].push_back(detail::time_call(sgs_full, budget));
      samples["eo"].push_back(detail::time_call(eo_full, budget));
    } else {
      samples["eo"].push_back(detail::time_call(eo_full, budget));
      samples["sgs"].push_back(detail::time_call(sgs_full, budget));
    }
    samples["eig"].push_back(detail::time_call([&] { sink = sink + eigendecompose(herm).eigenvalues(0); }, budget));
    samples["sgs_steps"].push_back(
        detail::time_call([&] { sink = sink + sgs_correct(spectrum).output.matrix()(0, 0).real(); }, budget));
    samples["eo_steps"].push_back(detail::time_call(
        [&] { sink = sink + eo_correct(spectrum, cfg.curve).output.matrix()(0, 0).real(); }, budget));
    if (cfg.runs(Algorithm::mle) && n <= cfg.mle_max_qubits && found <= 3) {
      const DensityMatrix init = eo_correct(spectrum, cfg.curve).output;
      const auto t0 = std::chrono::steady_clock::now();
      sink = sink + mle_correct(cr, init).output.matrix()(0, 0).real();
      samples["mle"].push_back(detail::seconds_since(t0));
    }
    if (cfg.runs(Algorithm::imle) && n <= cfg.imle_max_qubits && found <= 5) {
      const auto t0 = std::chrono::steady_clock::now();
      sink = sink + imle_correct(cr, DensityMatrix::maximally_mixed(n)).output.matrix()(0, 0).real();
      samples["imle"].push_back(detail::seconds_since(t0));
    }
  }
  std::vector<TimingRow> rows;
  for (const auto& [what, v] : samples) rows.push_back({n, what, detail::median(v), static_cast<int>(v.size())});
  return rows;
}

inline std::string timing_table_csv(const std::vector<TimingRow>& rows) {
  std::ostringstream ss;
  ss << "qubits,measurement,median_seconds,instances\n";
  for (const auto& r : rows) ss << r.num_qubits << ',' << r.what << ',' << format_number(r.mean_seconds) << ',' << r.instances << '\n';
  return ss.str();
}

struct QubitSweepResult {
  SweepResult sweep;
  std::vector<TimingRow> timing;

  double timing_of(int n, const std::string& what) const {
    for (const auto& r : timing) {
      if (r.num_qubits == n && r.what == what) return r.mean_seconds;
    }
    return std::nan("");
  }
};

/// Infidelity per qubit count at N = 4^n * counts_per_element, plus the
/// serial timing table.
inline QubitSweepResult run_qubit_sweep(const ExperimentConfig& cfg, bool with_timing = true) {
  cfg.validate();
  QubitSweepResult r;
  for (int n = cfg.min_qubits; n <= cfg.max_qubits; ++n) {
    const Workspace ws(n);
    const double total = std::pow(4.0, n) * cfg.counts_per_element;
    r.sweep.points.push_back(detail::run_point(cfg, ws, "qubits", n, n, total, cfg.purity, 0));
    auto rows = summarize_point(cfg, r.sweep.points.back());
    r.sweep.rows.insert(r.sweep.rows.end(), rows.begin(), rows.end());
    if (with_timing) {
      auto t = measure_timing(cfg, n);
      r.timing.insert(r.timing.end(), t.begin(), t.end());
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// curve derivation

struct DeriveResult {
  DistanceProfile profile;
  FitResult fit;
  int non_physical = 0;
  int optimizer_flags = 0;  // trials where the optimizer reported trouble
  double worst_trace_error = 0.0;
  double worst_violation = 0.0;
  std::vector<DistanceResult> distances;
};

/// state-gen -> counts -> linear reconstruction -> optimize_distances ->
/// aggregate -> fit. Purities are drawn uniformly from [purity_min,
/// purity_max]; trials whose reconstruction is physical contribute nothing.
inline DeriveResult run_derive_fit(const ExperimentConfig& cfg) {
  cfg.validate();
  const int n = cfg.num_qubits;
  const Workspace ws(n);
  const double total = std::pow(4.0, n) * cfg.counts_per_element;
  struct Job {
    std::optional<DistanceResult> result;
    double purity = 0.0;
    double trace_error = 0.0;
  };
  auto jobs = parallel_map<Job>(cfg.trials, cfg.threads, [&](int t) {
    const auto tt = static_cast<std::uint64_t>(t);
    Rng prng(derive_seed(cfg.seed, {detail::kPurityStream, static_cast<std::uint64_t>(n), tt}));
    const double target = std::uniform_real_distribution<double>(cfg.purity_min, cfg.purity_max)(prng);
    StateRecipe recipe;
    recipe.num_qubits = n;
    recipe.zero_fraction = cfg.zero_fraction;
    recipe.rotation_strength = cfg.rotation_strength;
    recipe.seed = derive_seed(cfg.seed, {detail::kStateStream, static_cast<std::uint64_t>(n), tt});
    recipe.purity_param = solve_purity_param(recipe, target);
    const DensityMatrix truth = rank_deficient_state(recipe);
    const CountRecord cr = simulate_counts(truth, ws.projectors, total / detail::cube_settings(n),
                                           derive_seed(cfg.seed, {detail::kNoiseStream, static_cast<std::uint64_t>(n), tt}),
                                           cfg.noise);
    const DensityMatrix linear = ws.linear->reconstruct(cr.probabilities());
    const Spectrum s = eigendecompose(DensityMatrix(n, linear.hermitian_part()));
    Job job;
    job.purity = purity(truth);
    if (!s.has_negative()) return job;
    job.result = optimize_distances(s, *ws.projectors);
    job.trace_error = std::abs((s.eigenvalues + job.result->distances).sum() - 1.0);
    return job;
  });

  DeriveResult out;
  std::vector<TrialDistances> trials;
  double pmin = 1.0;
  double pmax = 0.0;
  for (const auto& j : jobs) {
    pmin = std::min(pmin, j.purity);
    pmax = std::max(pmax, j.purity);
    if (!j.result) continue;
    ++out.non_physical;
    if (!j.result->converged) ++out.optimizer_flags;
    out.worst_trace_error = std::max(out.worst_trace_error, j.trace_error);
    out.worst_violation = std::max(out.worst_violation, j.result->max_violation);
    trials.push_back({j.result->distances, j.result->positive_count});
    out.distances.push_back(*j.result);
  }
  out.profile = aggregate_profiles(trials, cfg.bins);
  out.profile.purity_min = pmin;
  out.profile.purity_max = pmax;
  out.fit = fit_odd_series(out.profile, cfg.fit_terms, cfg.bins);
  return out;
}

inline std::string profile_csv(const DistanceProfile& p) {
  std::ostringstream ss;
  ss << "scaled_index,mean_scaled_distance,std,count\n";
  for (const auto& b : p.bins) {
    ss << format_number(b.scaled_index) << ',' << format_number(b.mean) << ',' << format_number(b.stddev) << ','
       << b.count << '\n';
  }
  return ss.str();
}

inline void write_derive_outputs(const ExperimentConfig& cfg, const DeriveResult& r) {
  write_text(cfg.out + "_profile.csv", profile_csv(r.profile));
  io::Json curve = io::to_json(r.fit.curve);
  write_text(cfg.out + "_curve.json", curve.dump(2) + "\n");
  io::Json meta = sidecar(cfg);
  meta["chi_square"] = r.fit.chi_square;
  meta["fitted_bins"] = r.fit.points;
  meta["profile"] = {{"qubits", r.profile.num_qubits},
                     {"trials_used", r.profile.trials},
                     {"trials_physical", cfg.trials - r.non_physical},
                     {"purity_min", r.profile.purity_min},
                     {"purity_max", r.profile.purity_max},
                     {"optimizer_flags", r.optimizer_flags},
                     {"worst_trace_error", r.worst_trace_error},
                     {"worst_violation", r.worst_violation}};
  write_text(cfg.out + ".json", meta.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// ingestion

struct ReconstructReport {
  int num_qubits = 0;
  double total_counts = 0.0;
  bool linear_physical = false;
  double linear_min_eigenvalue = 0.0;
  std::vector<AlgorithmOutcome> outcomes;
  std::map<Algorithm, DensityMatrix> estimates;
  bool has_reference = false;
};

/// Reconstructs an ingested count file with every configured algorithm.
/// Infidelities are reported only against a supplied reference matrix.
inline ReconstructReport reconstruct_record(const ExperimentConfig& cfg, const CountRecord& cr,
                                            const std::optional<DensityMatrix>& reference) {
  const int n = cr.num_qubits();
  if (reference && reference->num_qubits() != n) throw DomainError("reference qubit count does not match the counts");
  const LinearReconstructor lin(cr.projector_set_ptr());
  const auto t0 = std::chrono::steady_clock::now();
  const DensityMatrix linear = lin.reconstruct(cr.probabilities());
  const double lin_seconds = detail::seconds_since(t0);

  ExperimentConfig c = cfg;
  c.mle_max_qubits = std::max(cfg.mle_max_qubits, n);
  c.imle_max_qubits = std::max(cfg.imle_max_qubits, n);
  ReconstructReport rep;
  const TrialResult tr = correct_all(c, cr, linear, lin_seconds, reference ? &*reference : nullptr, &rep.estimates);

  rep.num_qubits = n;
  rep.total_counts = cr.total_counts();
  rep.linear_physical = tr.linear_physical;
  rep.linear_min_eigenvalue = DensityMatrix(n, linear.hermitian_part()).min_eigenvalue();
  rep.outcomes = tr.outcomes;
  rep.has_reference = reference.has_value();

  return rep;
}

inline ReconstructReport reconstruct_file(const ExperimentConfig& cfg) {
  const CountRecord cr = io::read_count_record(cfg.counts_path);
  std::optional<DensityMatrix> reference;
  if (!cfg.reference_path.empty()) reference = io::read_density(cfg.reference_path);
  return reconstruct_record(cfg, cr, reference);
}

inline void write_reconstruct_outputs(const ExperimentConfig& cfg, const ReconstructReport& rep) {
  io::Json report = sidecar(cfg);
  report["qubits"] = rep.num_qubits;
  report["total_counts"] = rep.total_counts;
  report["linear_physical"] = rep.linear_physical;
  report["linear_min_eigenvalue"] = rep.linear_min_eigenvalue;
  io::Json algos = io::Json::object();
  for (const auto& o : rep.outcomes) {
    io::Json entry{{"ok", o.ok}, {"purity", o.purity}, {"iterations", o.iterations}, {"seconds", o.seconds}};
    if (rep.has_reference && o.ok) entry["infidelity"] = o.infidelity;
    if (!o.error.empty()) entry["error"] = o.error;
    auto it = rep.estimates.find(o.algorithm);
    if (it != rep.estimates.end()) {
      const std::string path = cfg.out + "_" + to_string(o.algorithm) + ".json";
      io::write_density(path, it->second);
      entry["matrix"] = path;
      entry["min_eigenvalue"] = it->second.min_eigenvalue();
      entry["physical"] = it->second.is_physical();
    }
    algos[to_string(o.algorithm)] = std::move(entry);
  }
  report["algorithms"] = std::move(algos);
  write_text(cfg.out + ".json", report.dump(2) + "\n");
}

}  // namespace qtomo::bench
