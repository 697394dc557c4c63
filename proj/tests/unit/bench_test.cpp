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

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"

namespace qtomo::bench {
namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::path(::testing::TempDir()) / ("qtomo_bench_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QTOMO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.trials = 20;
  cfg.counts = {1000, 16000};
  cfg.algorithms = {Algorithm::linear, Algorithm::sgs, Algorithm::eo, Algorithm::mle, Algorithm::imle};
  return cfg;
}

TEST(Config, ParseAlgorithms) {
  EXPECT_EQ(parse_algorithms("eo,sgs"), (std::vector<Algorithm>{Algorithm::sgs, Algorithm::eo}));
  EXPECT_EQ(parse_algorithms("imle, linear"), (std::vector<Algorithm>{Algorithm::linear, Algorithm::imle}));
  EXPECT_THROW(parse_algorithms("eo,foo"), ConfigError);
  EXPECT_EQ(parse_algorithm("mle"), Algorithm::mle);
}

TEST(Config, Validation) {
  ExperimentConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.algorithms.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.trials = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.counts = {1000, 0};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.purities = {0.5, 1.5};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.kind = ExperimentKind::reconstruct;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(CountsSweep, NoiselessLinearTrialIsExact) {
  ExperimentConfig cfg;
  cfg.trials = 1;
  cfg.counts = {1e30};
  cfg.algorithms = {Algorithm::linear};
  const SweepResult r = run_counts_sweep(cfg);
  const PointSummary* row = r.row(0, Algorithm::linear);
  ASSERT_NE(row, nullptr);
  EXPECT_EQ(row->failures, 0);
  EXPECT_LT(row->infidelity.mean, 1e-6);
}

TEST(CountsSweep, BitIdenticalAcrossRunsAndThreadCounts) {
  ExperimentConfig cfg = small_config();
  const std::string a = results_csv(run_counts_sweep(cfg).rows);
  const std::string b = results_csv(run_counts_sweep(cfg).rows);
  cfg.threads = 4;
  const std::string c = results_csv(run_counts_sweep(cfg).rows);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  cfg.seed += 1;
  EXPECT_NE(a, results_csv(run_counts_sweep(cfg).rows));
}

TEST(CountsSweep, InfidelityFallsWithCounts) {
  ExperimentConfig cfg;
  cfg.trials = 60;
  cfg.counts = {1e3, 1e4, 1e5};
  cfg.algorithms = {Algorithm::sgs, Algorithm::eo, Algorithm::mle, Algorithm::imle};
  const SweepResult r = run_counts_sweep(cfg);
  for (Algorithm a : cfg.algorithms) {
    for (std::size_t i = 1; i < cfg.counts.size(); ++i) {
      EXPECT_LT(r.row(i, a)->infidelity.mean, r.row(i - 1, a)->infidelity.mean) << to_string(a);
    }
  }
}

TEST(DeriveFit, TooFewPositionsForTermsIsIllConditioned) {
  ExperimentConfig cfg;
  cfg.num_qubits = 2;
  cfg.trials = 5;
  EXPECT_THROW(run_derive_fit(cfg), IllConditioned);
}

TEST(CountsSweep, OutputsCarryConfigAndConventions) {
  ExperimentConfig cfg = small_config();
  cfg.trials = 3;
  cfg.out = temp_path("sweep");
  write_sweep_outputs(cfg, run_counts_sweep(cfg));
  const std::string csv = slurp(cfg.out + ".csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "sweep,point,qubits,total_counts,target_purity,algorithm,mean,std,trials,failures,mean_iterations,"
            "mean_purity,physical_input_fraction");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 5);
  const io::Json meta = io::Json::parse(slurp(cfg.out + ".json"));
  EXPECT_EQ(meta["version"], kVersion);
  EXPECT_EQ(meta["noise_model"], "gaussian");
  EXPECT_EQ(meta["a_mod_convention"], kAmodConvention);
  EXPECT_EQ(meta["config"]["trials"], 3);
  EXPECT_TRUE(std::filesystem::exists(cfg.out + "_timing.csv"));
}

TEST(PuritySweep, PureNoiselessStatesAreRecovered) {
  ExperimentConfig cfg;
  cfg.trials = 3;
  cfg.purities = {1.0};
  cfg.total_counts = 1e30;
  cfg.algorithms = {Algorithm::sgs, Algorithm::eo, Algorithm::mle, Algorithm::imle};
  const SweepResult r = run_purity_sweep(cfg);
  for (Algorithm a : cfg.algorithms) {
    ASSERT_EQ(r.row(0, a)->failures, 0) << to_string(a);
    EXPECT_LT(r.row(0, a)->infidelity.mean, 1e-3) << to_string(a);
  }
}

TEST(PuritySweep, EoLiesBetweenSgsAndMle) {
  ExperimentConfig cfg;
  cfg.trials = 100;
  cfg.purities = {0.6, 0.8, 0.9, 0.94, 0.97};
  cfg.algorithms = {Algorithm::sgs, Algorithm::eo, Algorithm::mle};
  const SweepResult r = run_purity_sweep(cfg);
  for (std::size_t i = 0; i < cfg.purities.size(); ++i) {
    const auto& eo = r.row(i, Algorithm::eo)->infidelity;
    EXPECT_LE(eo.mean, r.row(i, Algorithm::sgs)->infidelity.mean + eo.stddev) << cfg.purities[i];
    EXPECT_GE(eo.mean, r.row(i, Algorithm::mle)->infidelity.mean - eo.stddev) << cfg.purities[i];
  }
}

TEST(QubitSweep, InfidelityGrowsWithQubitCount) {
  ExperimentConfig cfg;
  cfg.trials = 50;
  cfg.min_qubits = 2;
  cfg.max_qubits = 5;
  cfg.algorithms = {Algorithm::sgs, Algorithm::eo};
  const QubitSweepResult r = run_qubit_sweep(cfg, false);
  for (Algorithm a : cfg.algorithms) {
    for (std::size_t i = 1; i < r.sweep.points.size(); ++i) {
      EXPECT_GT(r.sweep.row(i, a)->infidelity.mean, r.sweep.row(i - 1, a)->infidelity.mean) << to_string(a);
    }
  }
}

TEST(QubitSweep, MleCapSkipsLargerRegisters) {
  ExperimentConfig cfg;
  cfg.trials = 2;
  cfg.min_qubits = 2;
  cfg.max_qubits = 3;
  cfg.mle_max_qubits = 2;
  cfg.imle_max_qubits = 2;
  cfg.algorithms = {Algorithm::eo, Algorithm::mle, Algorithm::imle};
  const QubitSweepResult r = run_qubit_sweep(cfg, false);
  EXPECT_NE(r.sweep.row(0, Algorithm::mle), nullptr);
  EXPECT_EQ(r.sweep.row(1, Algorithm::mle), nullptr);
  EXPECT_EQ(r.sweep.row(1, Algorithm::imle), nullptr);
  EXPECT_NE(r.sweep.row(1, Algorithm::eo), nullptr);
}

TEST(DeriveFit, DeterministicAndFeasible) {
  ExperimentConfig cfg;
  cfg.num_qubits = 3;
  cfg.trials = 10;
  cfg.fit_terms = 3;
  const DeriveResult a = run_derive_fit(cfg);
  const DeriveResult b = run_derive_fit(cfg);
  EXPECT_EQ(a.fit.curve.coefficients, b.fit.curve.coefficients);
  EXPECT_GT(a.non_physical, 0);
  EXPECT_LT(a.worst_trace_error, 1e-9);
  EXPECT_LT(a.worst_violation, 1e-9);
}

TEST(Reconstruct, SelfComparisonAndRecovery) {
  const DensityMatrix reference = testing::random_state(2, 5);
  auto ps = std::make_shared<const ProjectorSet>(ProjectorSet::cube(2));
  const CountRecord cr = CountRecord::from_probabilities(ps, born_probabilities(reference, *ps), 1e9);
  ExperimentConfig cfg;
  const ReconstructReport rep = reconstruct_record(cfg, cr, reference);
  EXPECT_TRUE(rep.has_reference);
  EXPECT_TRUE(rep.linear_physical);
  for (const auto& o : rep.outcomes) {
    EXPECT_TRUE(o.ok) << to_string(o.algorithm) << ": " << o.error;
    EXPECT_LT(o.infidelity, 1e-6) << to_string(o.algorithm);
  }
  EXPECT_NEAR(infidelity(reference, reference), 0.0, 1e-12);
}

TEST(Cli, ReconstructWritesMatricesAndReport) {
  const DensityMatrix reference = testing::random_state(2, 6);
  auto ps = std::make_shared<const ProjectorSet>(ProjectorSet::cube(2));
  const std::string counts = temp_path("cli_counts.json");
  const std::string ref = temp_path("cli_ref.json");
  const std::string out = temp_path("cli_rec");
  io::write_count_record(counts, CountRecord::from_probabilities(ps, born_probabilities(reference, *ps), 1e9));
  io::write_density(ref, reference);
  ASSERT_EQ(run_cli("--out " + out + " reconstruct " + counts + " --reference " + ref), 0);
  const io::Json report = io::Json::parse(slurp(out + ".json"));
  for (const char* a : {"linear", "sgs", "eo", "imle"}) {
    EXPECT_LT(report["algorithms"][a]["infidelity"].get<double>(), 1e-6) << a;
    const DensityMatrix est = io::read_density(report["algorithms"][a]["matrix"].get<std::string>());
    EXPECT_LT(infidelity(reference, est), 1e-6);
  }
  // Restricting the algorithm list.
  ASSERT_EQ(run_cli("--out " + out + "_self --algos eo reconstruct " + counts + " --reference " + ref), 0);
  EXPECT_FALSE(io::Json::parse(slurp(out + "_self.json"))["algorithms"].contains("sgs"));
}

TEST(Cli, ExitCodes) {
  const std::string out = " --out " + temp_path("cli_exit");
  EXPECT_EQ(run_cli(out + " --trials 1 --algos sgs sweep-counts --counts 1000"), 0);
  EXPECT_EQ(run_cli(out + " --no-such-flag sweep-counts"), 2);
  EXPECT_EQ(run_cli(out + " --trials 0 sweep-counts"), 2);
  EXPECT_EQ(run_cli(out + " --algos foo sweep-counts"), 2);
  EXPECT_EQ(run_cli(out + " --noise poisson sweep-counts"), 2);
  EXPECT_EQ(run_cli(out + " --fit-curve /nonexistent/curve.json sweep-counts"), 2);
  EXPECT_EQ(run_cli(out), 2);

  const std::string bad = temp_path("cli_bad.json");
  std::ofstream(bad) << "{\"n\": 1, \"settings\": [\n{\"label\": \"Z\", \"shots\": 1,}\n]}";
  EXPECT_EQ(run_cli(out + " reconstruct " + bad), 3);
  const std::string unknown = temp_path("cli_unknown.json");
  std::ofstream(unknown) << R"({"n": 1, "settings": [{"label": "W", "shots": 1, "outcomes": []}]})";
  EXPECT_EQ(run_cli(out + " reconstruct " + unknown), 3);
  EXPECT_EQ(run_cli(out + " reconstruct " + temp_path("does_not_exist.json")), 3);
}

TEST(Cli, ConfigFileMirrorsFlags) {
  const std::string cfg = temp_path("cli.toml");
  const std::string out = temp_path("cli_cfg");
  std::ofstream(cfg) << "seed = 9\ntrials = 2\nalgos = \"sgs,eo\"\nout = \"" << out
                     << "\"\nnoise = \"multinomial\"\n[sweep-counts]\ncounts = [1000, 4000]\n";
  ASSERT_EQ(run_cli("--config " + cfg + " sweep-counts"), 0);
  const io::Json meta = io::Json::parse(slurp(out + ".json"));
  EXPECT_EQ(meta["config"]["seed"], 9);
  EXPECT_EQ(meta["config"]["trials"], 2);
  EXPECT_EQ(meta["noise_model"], "multinomial");
  EXPECT_EQ(meta["config"]["counts"].size(), 2u);
  // Command-line flags override the file.
  ASSERT_EQ(run_cli("--config " + cfg + " --trials 1 sweep-counts"), 0);
  EXPECT_EQ(io::Json::parse(slurp(out + ".json"))["config"]["trials"], 1);
}

TEST(Cli, DeriveFitSmokeRun) {
  const std::string out = temp_path("cli_derive");
  ASSERT_EQ(run_cli("--qubits 4 --trials 1 --out " + out + " derive-fit"), 0);
  const FitCurve c = io::read_fit_curve(out + "_curve.json");
  EXPECT_EQ(c.coefficients.size(), 6u);
  const io::Json meta = io::Json::parse(slurp(out + ".json"));
  EXPECT_TRUE(meta.contains("chi_square"));
  EXPECT_EQ(slurp(out + "_profile.csv").substr(0, 40), "scaled_index,mean_scaled_distance,std,co");
}

}  // namespace
}  // namespace qtomo::bench
