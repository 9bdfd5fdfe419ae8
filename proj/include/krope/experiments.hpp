#pragma once

#include "krope/diagnostics.hpp"
#include "krope/encoder.hpp"
#include "krope/mdp.hpp"

#include <string>
#include <vector>

namespace krope {

struct ExperimentConfig {
  std::string kind;  // garnet_sweep | counterexample | ope_trace | diagnose
  std::vector<std::string> algorithms{"krope"};
  std::vector<int> latent_dims{20};
  int trials = 1;
  std::uint64_t base_seed = 0;
  int jobs = 1;
  std::string out_dir = ".";

  // Garnet parameters.
  int n_states = 8;
  int n_actions = 5;
  int branching = 3;
  double gamma = 0.99;
  double softmax_tau = 0.25;
  int dataset_size = 10000;

  // Hyperparameter grid (single-entry lists collapse to a plain sweep).
  std::vector<double> learning_rates;
  std::vector<double> alphas;

  // Counterexample parameters.
  double p_loop = 0.7;
  int on_policy_count = 2000;
  int extra_count = 5000;

  int lspe_period = 10;  // ope_trace checkpoint spacing

  // diagnose inputs
  std::string mdp_path;
  std::string encoder_path;

  TrainingConfig training;
  std::string hash;  // canonical content hash, stamped on every CSV row

  void validate() const;
};

ExperimentConfig config_from_json_file(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);

struct CellResult {
  std::string algorithm;
  int dim = 0;
  std::uint64_t seed = 0;
  double learning_rate = 0.0;
  double alpha = 0.0;
  TrainStatus status = TrainStatus::Ok;
  DiagnosticsReport report;
};

// One row per (algorithm, dim, lr, alpha, trial); writes
// garnet_sweep.csv, garnet_sweep_summary.csv and garnet_sweep_cdf.csv
// under out_dir.
std::vector<CellResult> run_garnet_sweep(const ExperimentConfig& config);

struct CounterexampleRun {
  std::string name;  // e.g. krope_d2_w3, fqe_d1
  std::uint64_t seed = 0;
  TrainStatus status = TrainStatus::Ok;
  double final_loss = 0.0;
};

// The nine pairings: pure pair-loss training against each D2 variant,
// joint training against each variant, and TD-only training on D1 alone.
std::vector<CounterexampleRun> run_counterexample(
    const ExperimentConfig& config);

struct OpeCheckpoint {
  std::string algorithm;
  std::uint64_t seed = 0;
  int epoch = 0;
  double msve_normalized = 0.0;
  bool lspe_converged = false;
};

std::vector<OpeCheckpoint> run_ope_trace(const ExperimentConfig& config);

struct AggregateSummary {
  double mean = 0.0;
  double ci_half_width = 0.0;  // 1.96 * sd / sqrt(n_ok)
  double divergence_fraction = 0.0;
  int n = 0;
  int n_ok = 0;
  bool single_sample = false;
};

// Diverged entries are excluded from the mean and reported as a fraction.
AggregateSummary aggregate(const std::vector<double>& values,
                           const std::vector<bool>& diverged);

// Report for stored artifacts: MDP JSON plus encoder weights in matrix CSV.
DiagnosticsReport run_diagnose(const ExperimentConfig& config,
                               std::string* csv_row_out = nullptr);

}  // namespace krope
