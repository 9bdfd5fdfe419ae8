#include "krope/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  int trials = -1;
  long long seed = -1;
  int jobs = -1;
};

void add_common(CLI::App* cmd, CommonOpts* opts) {
  cmd->add_option("--config", opts->config_path, "Experiment config JSON");
  cmd->add_option("--out", opts->out_dir, "Output directory");
  cmd->add_option("--trials", opts->trials, "Number of trials");
  cmd->add_option("--seed", opts->seed, "Base seed");
  cmd->add_option("--jobs", opts->jobs, "Parallel workers");
}

krope::ExperimentConfig load_config(const CommonOpts& opts,
                                    const std::string& kind) {
  krope::ExperimentConfig cfg;
  if (!opts.config_path.empty()) {
    cfg = krope::config_from_json_file(opts.config_path);
  } else {
    cfg.kind = kind;
  }
  cfg.kind = kind;
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (opts.trials > 0) cfg.trials = opts.trials;
  if (opts.seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(opts.seed);
  if (opts.jobs > 0) cfg.jobs = opts.jobs;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular laboratory for stable offline value-function learning"};
  app.require_subcommand(1);

  CommonOpts sweep_opts, ce_opts, ope_opts, diag_opts;
  std::string diag_mdp, diag_encoder;

  CLI::App* sweep = app.add_subcommand(
      "garnet-sweep", "Representation sweep over random MDPs");
  add_common(sweep, &sweep_opts);
  CLI::App* ce = app.add_subcommand(
      "counterexample", "Divergence study on the hand-built MRP");
  add_common(ce, &ce_opts);
  CLI::App* ope = app.add_subcommand(
      "ope-trace", "Value-error trace of periodic linear evaluation");
  add_common(ope, &ope_opts);
  CLI::App* diag = app.add_subcommand(
      "diagnose", "One report row for a stored encoder and MDP");
  add_common(diag, &diag_opts);
  diag->add_option("--mdp", diag_mdp, "MDP JSON file");
  diag->add_option("--encoder", diag_encoder, "Encoder weights (matrix CSV)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed()) {
      krope::run_garnet_sweep(load_config(sweep_opts, "garnet_sweep"));
    } else if (ce->parsed()) {
      krope::run_counterexample(load_config(ce_opts, "counterexample"));
    } else if (ope->parsed()) {
      krope::run_ope_trace(load_config(ope_opts, "ope_trace"));
    } else if (diag->parsed()) {
      krope::ExperimentConfig cfg = load_config(diag_opts, "diagnose");
      if (!diag_mdp.empty()) cfg.mdp_path = diag_mdp;
      if (!diag_encoder.empty()) cfg.encoder_path = diag_encoder;
      std::string row;
      krope::run_diagnose(cfg, &row);
      std::cout << krope::DiagnosticsReport::csv_header() << ",config_hash\n"
                << row << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
