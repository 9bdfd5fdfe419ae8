#include "krope/experiments.hpp"

#include "krope/io.hpp"
#include "krope/kernel.hpp"
#include "krope/lspe.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace krope {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDatasetSeedMix = 0x2545f4914f6cdd1dULL;

const std::set<std::string> kKnownAlgorithms = {
    "krope",    "fqe",  "fqe+krope", "fqe+dr3",
    "fqe+beer", "bcrl", "bcrl-exp",  "exact_krope"};

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::ofstream open_csv(const std::string& dir, const std::string& name) {
  const std::string path = dir + "/" + name;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

// Runs items 0..n-1 on `jobs` threads; results land by index so output
// order never depends on scheduling.
void run_indexed(int n, int jobs, const std::function<void(int)>& work) {
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int n_threads = std::min(jobs, n);
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) work(i);
    });
  }
  for (std::thread& th : pool) th.join();
}

struct GarnetInstance {
  TabularMDP mdp;
  Policy pi_e;
  Policy behavior;
  OfflineDataset ds;
  Vec q_pi;
  Vec q_rand;
  Vec weights;
};

GarnetInstance make_garnet_instance(const ExperimentConfig& cfg,
                                    std::uint64_t seed) {
  GarnetInstance g;
  g.mdp = generate_garnet(cfg.n_states, cfg.n_actions, cfg.branching, seed,
                          cfg.gamma);
  const Vec q_star = optimal_q(g.mdp);
  g.pi_e = softmax_policy(g.mdp, q_star, cfg.softmax_tau);
  g.behavior = uniform_policy(cfg.n_states, cfg.n_actions);
  g.ds = sample_dataset(g.mdp, g.behavior, cfg.dataset_size,
                        seed ^ kDatasetSeedMix);
  g.q_pi = exact_q(g.mdp, g.pi_e);
  g.q_rand = exact_q(g.mdp, g.behavior);
  g.weights = g.ds.mu;
  if (g.weights.sum() <= 0.0) {
    g.weights = Vec::Constant(g.mdp.num_sa(), 1.0);
  }
  return g;
}

TrainResult train_algorithm(const std::string& alg, const OfflineDataset& ds,
                            const EncoderEnv& env, const TrainingConfig& tc,
                            const EpochCallback& cb = nullptr) {
  if (alg == "krope") return train_krope(ds, env, tc, cb);
  if (alg == "fqe") return train_auxiliary(ds, env, tc, AuxKind::None, cb);
  if (alg == "fqe+krope") {
    return train_auxiliary(ds, env, tc, AuxKind::Krope, cb);
  }
  if (alg == "fqe+dr3") return train_auxiliary(ds, env, tc, AuxKind::Dr3, cb);
  if (alg == "fqe+beer") {
    return train_auxiliary(ds, env, tc, AuxKind::Beer, cb);
  }
  if (alg == "bcrl") return train_bcrl(ds, env, tc, false, cb);
  if (alg == "bcrl-exp") return train_bcrl(ds, env, tc, true, cb);
  throw std::invalid_argument("unknown trainable algorithm: " + alg);
}

Mat exact_krope_features(const TabularMDP& mdp, const Policy& pi_e,
                         int max_rank) {
  const Mat p_pi = pi_transition_matrix(mdp, pi_e);
  const KernelMatrix k1 = k1_matrix(mdp.rewards, mdp.r_max, mdp.r_min);
  const KernelMatrix k =
      krope_fixed_point(k1.entries, p_pi, mdp.gamma, 1e-10);
  return factorize_kernel(k, 1e-12, max_rank);
}

CellResult eval_cell(const ExperimentConfig& cfg, const std::string& alg,
                     int dim, double lr, double alpha, std::uint64_t seed) {
  CellResult cell;
  cell.algorithm = alg;
  cell.dim = dim;
  cell.seed = seed;
  cell.learning_rate = lr;
  cell.alpha = alpha;

  const GarnetInstance g = make_garnet_instance(cfg, seed);
  Mat phi_all;
  if (alg == "exact_krope") {
    phi_all = exact_krope_features(g.mdp, g.pi_e, dim);
    cell.status = TrainStatus::Ok;
  } else {
    const EncoderEnv env = make_env(g.mdp, g.pi_e);
    TrainingConfig tc = cfg.training;
    tc.latent_dim = dim;
    tc.learning_rate = lr;
    tc.alpha = alpha;
    tc.seed = seed;
    const TrainResult res = train_algorithm(alg, g.ds, env, tc);
    cell.status = res.status;
    phi_all = encode_all(res.encoder, env);
  }
  try {
    cell.report =
        diagnose(g.mdp, g.pi_e, phi_all, g.q_pi, g.q_rand, g.weights);
  } catch (const std::exception&) {
    // Diverged encoders can produce non-finite features; the status column
    // already marks the row.
    cell.report = DiagnosticsReport{};
    cell.status = TrainStatus::Diverged;
  }
  return cell;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (kind != "garnet_sweep" && kind != "counterexample" &&
      kind != "ope_trace" && kind != "diagnose") {
    throw std::invalid_argument("unknown experiment kind: " + kind);
  }
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (latent_dims.empty()) throw std::invalid_argument("latent_dims empty");
  for (const std::string& alg : algorithms) {
    if (!kKnownAlgorithms.count(alg)) {
      throw std::invalid_argument("unknown algorithm: " + alg);
    }
  }
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  training.validate();
}

ExperimentConfig config_from_json_text(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig cfg;
  cfg.kind = j.value("kind", std::string("garnet_sweep"));
  if (cfg.kind == "counterexample") {
    // The divergence study runs the 3-feature encoder without bias or weight
    // decay so unstable pairings can actually cross the divergence threshold;
    // any field can still be overridden below.
    cfg.training.learning_rate = 2e-2;
    cfg.training.weight_decay = 0.0;
    cfg.training.epochs = 3500;
    cfg.training.batch_size = 1024;
    cfg.training.latent_dim = 3;
    cfg.training.alpha = 0.8;
    cfg.training.use_bias = false;
  }
  if (j.contains("algorithms")) {
    cfg.algorithms = j.at("algorithms").get<std::vector<std::string>>();
  }
  if (j.contains("latent_dims")) {
    cfg.latent_dims = j.at("latent_dims").get<std::vector<int>>();
  }
  cfg.trials = j.value("trials", cfg.trials);
  cfg.base_seed = j.value("base_seed", cfg.base_seed);
  cfg.jobs = j.value("jobs", cfg.jobs);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.n_states = j.value("n_states", cfg.n_states);
  cfg.n_actions = j.value("n_actions", cfg.n_actions);
  cfg.branching = j.value("branching", cfg.branching);
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.softmax_tau = j.value("softmax_tau", cfg.softmax_tau);
  cfg.dataset_size = j.value("dataset_size", cfg.dataset_size);
  if (j.contains("learning_rates")) {
    cfg.learning_rates = j.at("learning_rates").get<std::vector<double>>();
  }
  if (j.contains("alphas")) {
    cfg.alphas = j.at("alphas").get<std::vector<double>>();
  }
  cfg.p_loop = j.value("p_loop", cfg.p_loop);
  cfg.on_policy_count = j.value("on_policy_count", cfg.on_policy_count);
  cfg.extra_count = j.value("extra_count", cfg.extra_count);
  cfg.lspe_period = j.value("lspe_period", cfg.lspe_period);
  cfg.mdp_path = j.value("mdp_path", cfg.mdp_path);
  cfg.encoder_path = j.value("encoder_path", cfg.encoder_path);
  if (j.contains("training")) {
    const json& t = j.at("training");
    TrainingConfig& tc = cfg.training;
    tc.learning_rate = t.value("learning_rate", tc.learning_rate);
    tc.epochs = t.value("epochs", tc.epochs);
    tc.batch_size = t.value("batch_size", tc.batch_size);
    tc.alpha = t.value("alpha", tc.alpha);
    tc.target_update_period =
        t.value("target_update_period", tc.target_update_period);
    tc.latent_dim = t.value("latent_dim", tc.latent_dim);
    tc.weight_decay = t.value("weight_decay", tc.weight_decay);
    tc.beer_floor = t.value("beer_floor", tc.beer_floor);
    tc.bcrl_head_lr = t.value("bcrl_head_lr", tc.bcrl_head_lr);
    tc.bcrl_logdet_coeff =
        t.value("bcrl_logdet_coeff", tc.bcrl_logdet_coeff);
    tc.all_pairs = t.value("all_pairs", tc.all_pairs);
    tc.sampled_next_action =
        t.value("sampled_next_action", tc.sampled_next_action);
    tc.use_bias = t.value("use_bias", tc.use_bias);
  }
  // Canonical hash of the sorted-key dump so identical configs stamp
  // identical rows regardless of key order in the source file.
  cfg.hash = fnv1a_hex(j.dump());
  cfg.validate();
  return cfg;
}

ExperimentConfig config_from_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return config_from_json_text(ss.str());
}

AggregateSummary aggregate(const std::vector<double>& values,
                           const std::vector<bool>& diverged) {
  if (values.size() != diverged.size()) {
    throw std::invalid_argument("aggregate: size mismatch");
  }
  AggregateSummary s;
  s.n = static_cast<int>(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (diverged[i]) continue;
    sum += values[i];
    ++s.n_ok;
  }
  s.divergence_fraction =
      s.n > 0 ? static_cast<double>(s.n - s.n_ok) / s.n : 0.0;
  if (s.n_ok == 0) return s;
  s.mean = sum / s.n_ok;
  if (s.n_ok == 1) {
    s.single_sample = true;
    s.ci_half_width = 0.0;
    return s;
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!diverged[i]) ss += (values[i] - s.mean) * (values[i] - s.mean);
  }
  const double sd = std::sqrt(ss / (s.n_ok - 1));
  s.ci_half_width = 1.96 * sd / std::sqrt(static_cast<double>(s.n_ok));
  return s;
}

std::vector<CellResult> run_garnet_sweep(const ExperimentConfig& config) {
  config.validate();
  std::vector<double> lrs = config.learning_rates;
  if (lrs.empty()) lrs.push_back(config.training.learning_rate);
  std::vector<double> alphas = config.alphas;
  if (alphas.empty()) alphas.push_back(config.training.alpha);

  struct Item {
    std::string alg;
    int dim;
    double lr;
    double alpha;
    std::uint64_t seed;
  };
  std::vector<Item> items;
  for (const std::string& alg : config.algorithms) {
    for (int d : config.latent_dims) {
      for (double lr : lrs) {
        for (double a : alphas) {
          for (int t = 0; t < config.trials; ++t) {
            items.push_back({alg, d, lr, a, config.base_seed + t});
          }
        }
      }
    }
  }

  std::vector<CellResult> results(items.size());
  run_indexed(static_cast<int>(items.size()), config.jobs, [&](int i) {
    const Item& it = items[i];
    results[i] = eval_cell(config, it.alg, it.dim, it.lr, it.alpha, it.seed);
  });

  std::ofstream f = open_csv(config.out_dir, "garnet_sweep.csv");
  f << "algorithm,dim,learning_rate,alpha,seed,status,"
    << DiagnosticsReport::csv_header() << ",config_hash\n";
  for (const CellResult& c : results) {
    f << c.algorithm << ',' << c.dim << ',' << format_double(c.learning_rate)
      << ',' << format_double(c.alpha) << ',' << c.seed << ','
      << (c.status == TrainStatus::Ok ? "ok" : "diverged") << ','
      << c.report.csv_row() << ',' << config.hash << '\n';
  }

  // Per-cell aggregation over trials (95% normal-approximation interval).
  std::ofstream g = open_csv(config.out_dir, "garnet_sweep_summary.csv");
  g << "algorithm,dim,learning_rate,alpha,metric,mean,ci_half_width,"
       "divergence_fraction,n,n_ok,stable_fraction,config_hash\n";
  for (const std::string& alg : config.algorithms) {
    for (int d : config.latent_dims) {
      for (double lr : lrs) {
        for (double a : alphas) {
          std::vector<const CellResult*> cell;
          for (const CellResult& c : results) {
            if (c.algorithm == alg && c.dim == d && c.learning_rate == lr &&
                c.alpha == a) {
              cell.push_back(&c);
            }
          }
          std::vector<bool> div;
          double stable = 0.0;
          for (const CellResult* c : cell) {
            div.push_back(c->status != TrainStatus::Ok);
            if (c->status == TrainStatus::Ok && c->report.is_stable) {
              stable += 1.0;
            }
          }
          const double stable_frac =
              cell.empty() ? 0.0 : stable / static_cast<double>(cell.size());
          const auto emit = [&](const std::string& metric,
                                const std::function<double(
                                    const DiagnosticsReport&)>& get) {
            std::vector<double> vals;
            for (const CellResult* c : cell) vals.push_back(get(c->report));
            const AggregateSummary s = aggregate(vals, div);
            g << alg << ',' << d << ',' << format_double(lr) << ','
              << format_double(a) << ',' << metric << ','
              << format_double(s.mean) << ',' << format_double(s.ci_half_width)
              << ',' << format_double(s.divergence_fraction) << ',' << s.n
              << ',' << s.n_ok << ',' << format_double(stable_frac) << ','
              << config.hash << '\n';
          };
          emit("spectral_radius", [](const DiagnosticsReport& r) {
            return r.spectral_radius;
          });
          emit("msve_normalized", [](const DiagnosticsReport& r) {
            return r.msve_normalized;
          });
          emit("realizability_error", [](const DiagnosticsReport& r) {
            return r.realizability_error;
          });
          emit("condition_number", [](const DiagnosticsReport& r) {
            return r.condition_number;
          });
          emit("coadaptation", [](const DiagnosticsReport& r) {
            return r.coadaptation;
          });
        }
      }
    }
  }

  // Grid view: cumulative distribution of final normalized value error
  // across every non-diverged cell, for sensitivity profiles.
  std::vector<double> errs;
  for (const CellResult& c : results) {
    if (c.status == TrainStatus::Ok &&
        std::isfinite(c.report.msve_normalized)) {
      errs.push_back(c.report.msve_normalized);
    }
  }
  std::sort(errs.begin(), errs.end());
  std::ofstream h = open_csv(config.out_dir, "garnet_sweep_cdf.csv");
  h << "msve_normalized,cumulative_fraction,config_hash\n";
  for (std::size_t i = 0; i < errs.size(); ++i) {
    h << format_double(errs[i]) << ','
      << format_double(static_cast<double>(i + 1) / errs.size()) << ','
      << config.hash << '\n';
  }
  return results;
}

std::vector<CounterexampleRun> run_counterexample(
    const ExperimentConfig& config) {
  config.validate();
  const CounterexampleMRP ce = counterexample_mrp(config.p_loop);
  const Policy pi = uniform_policy(ce.mdp.n_states, ce.mdp.n_actions);
  const EncoderEnv env = make_env(ce.mdp, pi, &ce.features);

  // D1: on-policy data plus many repeats of the w3 -> 2w3 transition.
  std::vector<Transition> d1_tuples = counterexample_on_policy(
      ce, config.on_policy_count);
  for (int i = 0; i < config.extra_count; ++i) {
    d1_tuples.push_back({3, 0, ce.mdp.rewards[3], 2});
  }
  const OfflineDataset d1 = synthetic_dataset(
      d1_tuples, ce.mdp.n_states, ce.mdp.n_actions, &ce.mdp);

  const std::vector<std::pair<std::string, int>> variants = {
      {"w1", 0}, {"w2", 1}, {"2w3", 2}, {"w3", 3}};
  std::vector<OfflineDataset> d2;
  for (const auto& [name, state] : variants) {
    std::vector<Transition> tuples =
        counterexample_on_policy(ce, config.on_policy_count);
    const std::vector<Transition> extra =
        counterexample_from_state(ce, state, config.extra_count);
    tuples.insert(tuples.end(), extra.begin(), extra.end());
    d2.push_back(synthetic_dataset(tuples, ce.mdp.n_states, ce.mdp.n_actions,
                                   &ce.mdp));
  }

  struct Item {
    std::string name;
    int variant;  // -1 for the TD-only run on D1
    bool joint;
    std::uint64_t seed;
  };
  std::vector<Item> items;
  for (int t = 0; t < config.trials; ++t) {
    const std::uint64_t seed = config.base_seed + t;
    for (std::size_t v = 0; v < variants.size(); ++v) {
      items.push_back({"krope_d2_" + variants[v].first,
                       static_cast<int>(v), false, seed});
    }
    for (std::size_t v = 0; v < variants.size(); ++v) {
      items.push_back({"fqe_krope_d2_" + variants[v].first,
                       static_cast<int>(v), true, seed});
    }
    items.push_back({"fqe_d1", -1, false, seed});
  }

  std::vector<CounterexampleRun> runs(items.size());
  std::vector<std::vector<EpochRecord>> traces(items.size());
  run_indexed(static_cast<int>(items.size()), config.jobs, [&](int i) {
    const Item& it = items[i];
    TrainingConfig tc = config.training;
    tc.seed = it.seed;
    TrainResult res;
    if (it.variant < 0) {
      res = train_auxiliary(d1, env, tc, AuxKind::None);
    } else if (it.joint) {
      // TD loss on the variant dataset; the pair loss couples it with D1.
      res = train_fqe_krope_paired(d2[it.variant], d1, env, tc);
    } else {
      res = train_krope_paired(d1, d2[it.variant], env, tc);
    }
    CounterexampleRun run;
    run.name = it.name;
    run.seed = it.seed;
    run.status = res.status;
    run.final_loss = res.trace.empty() ? 0.0 : res.trace.back().loss;
    runs[i] = run;
    traces[i] = res.trace;
  });

  std::ofstream f = open_csv(config.out_dir, "counterexample.csv");
  f << "run,seed,status,final_loss,config_hash\n";
  for (const CounterexampleRun& r : runs) {
    f << r.name << ',' << r.seed << ','
      << (r.status == TrainStatus::Ok ? "ok" : "diverged") << ','
      << format_double(r.final_loss) << ',' << config.hash << '\n';
  }
  for (std::size_t i = 0; i < runs.size(); ++i) {
    write_training_trace_csv(
        traces[i], config.out_dir + "/counterexample_" + runs[i].name +
                       "_seed" + std::to_string(runs[i].seed) + ".csv");
  }
  return runs;
}

std::vector<OpeCheckpoint> run_ope_trace(const ExperimentConfig& config) {
  config.validate();
  struct Item {
    std::string alg;
    std::uint64_t seed;
  };
  std::vector<Item> items;
  for (const std::string& alg : config.algorithms) {
    if (alg == "exact_krope") continue;
    for (int t = 0; t < config.trials; ++t) {
      items.push_back({alg, config.base_seed + t});
    }
  }

  std::vector<std::vector<OpeCheckpoint>> per_item(items.size());
  run_indexed(static_cast<int>(items.size()), config.jobs, [&](int i) {
    const Item& it = items[i];
    const GarnetInstance g = make_garnet_instance(config, it.seed);
    const EncoderEnv env = make_env(g.mdp, g.pi_e);
    TrainingConfig tc = config.training;
    tc.seed = it.seed;
    tc.latent_dim = config.latent_dims.front();
    std::vector<OpeCheckpoint>& out = per_item[i];
    const EpochCallback cb = [&](int epoch, const LinearEncoder& enc,
                                 const FqeHead&) {
      if ((epoch + 1) % config.lspe_period != 0) return;
      OpeCheckpoint cp;
      cp.algorithm = it.alg;
      cp.seed = it.seed;
      cp.epoch = epoch + 1;
      const LspeProblem prob = dataset_problem(g.ds, enc, env);
      const LspeResult sol =
          lspe_solve(prob, Vec::Zero(enc.latent_dim()), g.mdp.gamma);
      cp.lspe_converged = sol.status == LspeStatus::Converged;
      if (cp.lspe_converged) {
        const Vec q_hat = encode_all(enc, env) * sol.theta;
        cp.msve_normalized =
            normalized_msve(q_hat, g.q_pi, g.q_rand, g.weights);
      } else {
        cp.msve_normalized = std::nan("");
      }
      out.push_back(cp);
    };
    // The callback fires after each completed epoch; diverged runs simply
    // stop producing checkpoints.
    train_algorithm(it.alg, g.ds, env, tc, cb);
  });

  std::vector<OpeCheckpoint> all;
  std::ofstream f = open_csv(config.out_dir, "ope_trace.csv");
  f << "algorithm,seed,epoch,msve_normalized,lspe_status,config_hash\n";
  for (const auto& chunk : per_item) {
    for (const OpeCheckpoint& cp : chunk) {
      f << cp.algorithm << ',' << cp.seed << ',' << cp.epoch << ',';
      if (cp.lspe_converged) {
        f << format_double(cp.msve_normalized) << ",converged,";
      } else {
        f << ",diverged,";
      }
      f << config.hash << '\n';
      all.push_back(cp);
    }
  }
  return all;
}

DiagnosticsReport run_diagnose(const ExperimentConfig& config,
                               std::string* csv_row_out) {
  if (config.mdp_path.empty() || config.encoder_path.empty()) {
    throw std::invalid_argument("diagnose needs mdp_path and encoder_path");
  }
  const TabularMDP mdp = read_mdp_json(config.mdp_path);
  const Mat weights = read_matrix_csv(config.encoder_path);
  LinearEncoder enc;
  enc.weights = weights;
  const Vec q_star = optimal_q(mdp);
  const Policy pi_e = softmax_policy(mdp, q_star, config.softmax_tau);
  const Policy rand_pi = uniform_policy(mdp.n_states, mdp.n_actions);
  const EncoderEnv env = make_env(mdp, pi_e);
  if (enc.input_dim() != env.inputs.cols()) {
    throw std::invalid_argument("encoder input dimension does not match MDP");
  }
  const Mat phi_all = encode_all(enc, env);
  const Vec q_pi = exact_q(mdp, pi_e);
  const Vec q_rand = exact_q(mdp, rand_pi);
  const Vec uniform_w = Vec::Constant(mdp.num_sa(), 1.0);
  const DiagnosticsReport rep =
      diagnose(mdp, pi_e, phi_all, q_pi, q_rand, uniform_w);
  if (csv_row_out != nullptr) {
    *csv_row_out = rep.csv_row() + "," + config.hash;
  }
  return rep;
}

}  // namespace krope
