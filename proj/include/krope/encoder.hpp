#pragma once

#include "krope/mdp.hpp"

#include <functional>
#include <string>
#include <vector>

namespace krope {

// Affine map from per-state-action input features (one-hot by default) to a
// d-dimensional representation. Last weight column is the bias.
struct LinearEncoder {
  Mat weights;  // d x (n_in + 1)

  int latent_dim() const { return static_cast<int>(weights.rows()); }
  int input_dim() const { return static_cast<int>(weights.cols()) - 1; }

  // Features for every row of inputs (|X| x n_in) -> |X| x d.
  Mat features(const Mat& inputs) const;
};

LinearEncoder init_encoder(int latent_dim, int input_dim, Rng& rng,
                           double scale = 0.1);

// Everything the losses need to know about the environment: input features
// per state-action, the target policy, and reward bounds. Terminal states
// contribute zero next-state features and zero bootstrap values.
struct EncoderEnv {
  Mat inputs;  // |X| x n_in
  Mat pi_e;    // n_states x n_actions
  int n_states = 0;
  int n_actions = 0;
  double gamma = 0.99;
  double r_min = -1.0;
  double r_max = 1.0;
  std::vector<bool> terminal;

  int num_sa() const { return n_states * n_actions; }
};

// One-hot inputs by default; native per-state features when supplied (the
// counterexample MRP feeds its 4 x 3 feature matrix here).
EncoderEnv make_env(const TabularMDP& mdp, const Policy& pi_e,
                    const Mat* native_state_features = nullptr);

// Latent features of every state-action: |X| x d.
Mat encode_all(const LinearEncoder& enc, const EncoderEnv& env);

// Expected next features per state under pi_e (zero rows for terminals):
// n_states x d.
Mat expected_state_features(const Mat& phi_all, const EncoderEnv& env);

struct FqeHead {
  Vec w;
  double b = 0.0;
};

struct BcrlHeads {
  Mat m;    // d x d next-feature predictor
  Vec rho;  // d reward predictor
};

// ---- Losses (analytic gradients; target-side terms are constants) ----

// Mean over zipped pairs of (k1 + gamma * kbar(next) - k(current))^2.
// Next actions are exact pi_e expectations unless sampled next actions are
// supplied (one per transition, -1 keeps the exact expectation).
double krope_pair_loss(const LinearEncoder& enc, const LinearEncoder& target,
                       const std::vector<Transition>& batch1,
                       const std::vector<Transition>& batch2,
                       const EncoderEnv& env, Mat* grad = nullptr,
                       const std::vector<int>* next_a1 = nullptr,
                       const std::vector<int>* next_a2 = nullptr);

// Squared TD error with frozen targets; gradients to both encoder and head.
double fqe_loss(const LinearEncoder& enc, const FqeHead& head,
                const LinearEncoder& target_enc, const FqeHead& target_head,
                const std::vector<Transition>& batch, const EncoderEnv& env,
                Mat* grad_enc = nullptr, Vec* grad_head_w = nullptr,
                double* grad_head_b = nullptr,
                const std::vector<int>* next_a = nullptr);

// Mean |phi(s,a)^T phi(s',a')| with a' ~ pi_e; gradient through both sides.
double dr3_penalty(const LinearEncoder& enc,
                   const std::vector<Transition>& batch, const EncoderEnv& env,
                   Mat* grad = nullptr);

// Hinge floor on the same dot product: mean max(0, b - <.,.>)^2.
double beer_penalty(const LinearEncoder& enc,
                    const std::vector<Transition>& batch,
                    const EncoderEnv& env, double floor, Mat* grad = nullptr);

struct BcrlLoss {
  double reward_loss = 0.0;
  double selfpred_loss = 0.0;
  double logdet_term = 0.0;  // -coeff * log det(cov + eps I)
  double total() const { return reward_loss + selfpred_loss + logdet_term; }
};

BcrlLoss bcrl_losses(const LinearEncoder& enc, const BcrlHeads& heads,
                     const LinearEncoder& target_enc,
                     const std::vector<Transition>& batch,
                     const EncoderEnv& env, double logdet_coeff,
                     Mat* grad_enc = nullptr, Mat* grad_m = nullptr,
                     Vec* grad_rho = nullptr);

// ---- Training ----

struct TrainingConfig {
  double learning_rate = 1e-3;
  int epochs = 500;
  int batch_size = 2048;
  double alpha = 0.1;  // auxiliary task weight
  int target_update_period = 1;
  std::uint64_t seed = 0;
  int latent_dim = 20;
  double weight_decay = 1e-2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double beer_floor = 0.0;
  double bcrl_head_lr = 1e-4;
  double bcrl_logdet_coeff = 1e-2;
  bool all_pairs = false;           // all ordered pairs within one batch
  bool sampled_next_action = false; // single-sample next actions
  bool use_bias = true;             // freeze the bias column at zero if false
  double divergence_threshold = 1e12;

  void validate() const;
};

// Adaptive-moment gradient descent with decoupled weight decay.
struct AdamW {
  double lr;
  double beta1;
  double beta2;
  double weight_decay;
  double eps = 1e-8;
  Mat m, v;
  long t = 0;

  AdamW(double lr_, double b1, double b2, double wd, int rows, int cols)
      : lr(lr_), beta1(b1), beta2(b2), weight_decay(wd),
        m(Mat::Zero(rows, cols)), v(Mat::Zero(rows, cols)) {}

  void step(Mat& w, const Mat& g);
};

enum class TrainStatus { Ok, Diverged };

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double aux_loss = 0.0;
  double param_norm = 0.0;
  TrainStatus status = TrainStatus::Ok;
};

struct TrainResult {
  LinearEncoder encoder;
  FqeHead head;
  BcrlHeads bcrl;
  std::vector<EpochRecord> trace;
  TrainStatus status = TrainStatus::Ok;
};

enum class AuxKind { None, Krope, Dr3, Beer };
AuxKind aux_kind_from_string(const std::string& name);

using EpochCallback =
    std::function<void(int epoch, const LinearEncoder& enc, const FqeHead&)>;

// Pure semi-gradient training on the pair loss (pairs zipped from two
// independent shuffles of the dataset, or from two datasets).
TrainResult train_krope(const OfflineDataset& ds, const EncoderEnv& env,
                        const TrainingConfig& cfg,
                        const EpochCallback& on_epoch = nullptr);
TrainResult train_krope_paired(const OfflineDataset& a,
                               const OfflineDataset& b, const EncoderEnv& env,
                               const TrainingConfig& cfg,
                               const EpochCallback& on_epoch = nullptr);

// alpha * aux + (1 - alpha) * fqe joint training.
TrainResult train_auxiliary(const OfflineDataset& ds, const EncoderEnv& env,
                            const TrainingConfig& cfg, AuxKind aux,
                            const EpochCallback& on_epoch = nullptr);

// FQE on dataset `a` with the pair loss over (a, b) as auxiliary task.
TrainResult train_fqe_krope_paired(const OfflineDataset& a,
                                   const OfflineDataset& b,
                                   const EncoderEnv& env,
                                   const TrainingConfig& cfg,
                                   const EpochCallback& on_epoch = nullptr);

TrainResult train_bcrl(const OfflineDataset& ds, const EncoderEnv& env,
                       const TrainingConfig& cfg, bool exploration,
                       const EpochCallback& on_epoch = nullptr);

}  // namespace krope
