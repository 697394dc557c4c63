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

// Command-line front end. Exit codes: 0 success, 2 configuration error,
// 3 ingestion error, 1 anything else.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qtomo/bench.hpp"

namespace {

using qtomo::bench::ExperimentConfig;
using qtomo::bench::ExperimentKind;

constexpr int kExitConfig = 2;
constexpr int kExitIngestion = 3;

struct Flags {
  std::string algos;
  std::string noise = "gaussian";
};

void print_rows(const std::vector<qtomo::bench::PointSummary>& rows) {
  for (const auto& r : rows) {
    std::cout << r.point_name << '=' << r.point << ' ' << qtomo::bench::to_string(r.algorithm)
              << " mean=" << r.infidelity.mean << " std=" << r.infidelity.stddev << " n=" << r.infidelity.count
              << '\n';
  }
}

int run(ExperimentConfig& cfg, const Flags& flags) {
  if (!flags.algos.empty()) cfg.algorithms = qtomo::bench::parse_algorithms(flags.algos);
  cfg.noise = qtomo::parse_noise_model(flags.noise);
  if (!cfg.fit_curve_path.empty()) {
    try {
      cfg.curve = qtomo::io::read_fit_curve(cfg.fit_curve_path);
    } catch (const qtomo::SchemaError& e) {
      throw qtomo::ConfigError(std::string("fit curve: ") + e.what());
    }
  }
  cfg.validate();

  switch (cfg.kind) {
    case ExperimentKind::counts_sweep: {
      const auto r = qtomo::bench::run_counts_sweep(cfg);
      qtomo::bench::write_sweep_outputs(cfg, r);
      print_rows(r.rows);
      break;
    }
    case ExperimentKind::purity_sweep: {
      const auto r = qtomo::bench::run_purity_sweep(cfg);
      qtomo::bench::write_sweep_outputs(cfg, r);
      print_rows(r.rows);
      break;
    }
    case ExperimentKind::qubit_sweep: {
      const auto r = qtomo::bench::run_qubit_sweep(cfg);
      qtomo::bench::write_sweep_outputs(cfg, r.sweep);
      qtomo::bench::write_text(cfg.out + "_runtime.csv", qtomo::bench::timing_table_csv(r.timing));
      print_rows(r.sweep.rows);
      break;
    }
    case ExperimentKind::derive_fit: {
      const auto r = qtomo::bench::run_derive_fit(cfg);
      qtomo::bench::write_derive_outputs(cfg, r);
      std::cout << "trials with negative eigenvalues: " << r.non_physical << "\nchi_square: " << r.fit.chi_square
                << "\ncoefficients:";
      for (double c : r.fit.curve.coefficients) std::cout << ' ' << c;
      std::cout << '\n';
      break;
    }
    case ExperimentKind::reconstruct: {
      const auto rep = qtomo::bench::reconstruct_file(cfg);
      qtomo::bench::write_reconstruct_outputs(cfg, rep);
      for (const auto& o : rep.outcomes) {
        std::cout << qtomo::bench::to_string(o.algorithm) << (o.ok ? " ok" : " failed");
        if (o.ok && rep.has_reference) std::cout << " infidelity=" << o.infidelity;
        if (!o.error.empty()) std::cout << " (" << o.error << ')';
        std::cout << '\n';
      }
      break;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Density-matrix reconstruction benchmarks and physicality corrections"};
  app.set_config("--config", "", "TOML/INI file whose keys mirror the command-line flags");
  app.require_subcommand(1);
  app.fallthrough();

  ExperimentConfig cfg;
  Flags flags;
  app.add_option("--seed", cfg.seed, "master seed")->capture_default_str();
  app.add_option("--trials", cfg.trials, "trials per sweep point")->capture_default_str();
  app.add_option("--algos", flags.algos, "comma-separated subset of linear,sgs,eo,mle,imle");
  app.add_option("--out", cfg.out, "output path stem")->capture_default_str();
  app.add_option("--fit-curve", cfg.fit_curve_path, "fit curve JSON {\"c\": [...]} (default: built-in reference)");
  app.add_option("--threads", cfg.threads, "worker threads, 0 = all cores")->capture_default_str();
  app.add_option("--noise", flags.noise, "gaussian|multinomial")->capture_default_str();
  app.add_option("--qubits", cfg.num_qubits, "qubit count")->capture_default_str();
  app.add_option("--zero-fraction", cfg.zero_fraction, "fraction of eigenvalues zeroed in generated states")
      ->capture_default_str();
  app.add_option("--rotation-strength", cfg.rotation_strength, "rotation error strength")->capture_default_str();

  auto* counts = app.add_subcommand("sweep-counts", "infidelity vs total counts at fixed purity");
  counts->add_option("--counts", cfg.counts, "total counts N per point")->delimiter(',');
  counts->add_option("--purity", cfg.purity, "target purity")->capture_default_str();

  auto* purity = app.add_subcommand("sweep-purity", "infidelity vs purity at fixed total counts");
  purity->add_option("--purities", cfg.purities, "target purities")->delimiter(',');
  purity->add_option("--total-counts", cfg.total_counts, "total counts N")->capture_default_str();

  auto* qubits = app.add_subcommand("sweep-qubits", "infidelity and run time vs qubit count");
  qubits->add_option("--min-qubits", cfg.min_qubits)->capture_default_str();
  qubits->add_option("--max-qubits", cfg.max_qubits)->capture_default_str();
  qubits->add_option("--mle-max-qubits", cfg.mle_max_qubits, "largest n for which MLE runs")->capture_default_str();
  qubits->add_option("--imle-max-qubits", cfg.imle_max_qubits, "largest n for which iMLE runs")->capture_default_str();
  qubits->add_option("--counts-per-element", cfg.counts_per_element, "N = 4^n times this")->capture_default_str();
  qubits->add_option("--purity", cfg.purity, "target purity")->capture_default_str();
  qubits->add_option("--timing-instances", cfg.timing_instances)->capture_default_str();

  auto* derive = app.add_subcommand("derive-fit", "re-derive the EO weighting curve");
  derive->add_option("--purity-min", cfg.purity_min)->capture_default_str();
  derive->add_option("--purity-max", cfg.purity_max)->capture_default_str();
  derive->add_option("--bins", cfg.bins)->capture_default_str();
  derive->add_option("--terms", cfg.fit_terms, "odd power-series terms")->capture_default_str();
  derive->add_option("--counts-per-element", cfg.counts_per_element, "N = 4^n times this")->capture_default_str();

  auto* recon = app.add_subcommand("reconstruct", "reconstruct a count file");
  recon->add_option("counts", cfg.counts_path, "count record JSON")->required();
  recon->add_option("--reference", cfg.reference_path, "reference density matrix JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (counts->parsed()) cfg.kind = ExperimentKind::counts_sweep;
  if (purity->parsed()) cfg.kind = ExperimentKind::purity_sweep;
  if (qubits->parsed()) cfg.kind = ExperimentKind::qubit_sweep;
  if (derive->parsed()) cfg.kind = ExperimentKind::derive_fit;
  if (recon->parsed()) {
    cfg.kind = ExperimentKind::reconstruct;
    if (flags.algos.empty()) flags.algos = "linear,sgs,eo,imle";
  }

  try {
    return run(cfg, flags);
  } catch (const qtomo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const qtomo::SchemaError& e) {
    std::cerr << "ingestion error: " << e.what() << '\n';
    return kExitIngestion;
  } catch (const qtomo::UnknownProjectorLabel& e) {
    std::cerr << "ingestion error: " << e.what() << '\n';
    return kExitIngestion;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
