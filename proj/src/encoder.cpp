#include "krope/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace krope {

namespace {

// Augmented input rows [u | 1] so the bias column folds into one matrix.
Mat augmented_inputs(const Mat& inputs) {
  Mat aug(inputs.rows(), inputs.cols() + 1);
  aug.leftCols(inputs.cols()) = inputs;
  aug.col(inputs.cols()).setOnes();
  return aug;
}

double k1_scalar(double r1, double r2, const EncoderEnv& env) {
  return 1.0 - std::abs(r1 - r2) / std::abs(env.r_max - env.r_min);
}

// Accumulates per-state-action coefficient vectors; the weight gradient is
// coeffs * [U | 1].
struct GradScatter {
  Mat coeffs;  // d x |X|
  explicit GradScatter(int d, int nx) : coeffs(Mat::Zero(d, nx)) {}
  void add(int sa, const Vec& v) { coeffs.col(sa) += v; }
  Mat materialize(const Mat& aug_inputs) const { return coeffs * aug_inputs; }
};

}  // namespace

Mat LinearEncoder::features(const Mat& inputs) const {
  const int n_in = input_dim();
  if (inputs.cols() != n_in) {
    throw std::invalid_argument("LinearEncoder: input dimension mismatch");
  }
  Mat phi = inputs * weights.leftCols(n_in).transpose();
  phi.rowwise() += weights.col(n_in).transpose();
  return phi;
}

LinearEncoder init_encoder(int latent_dim, int input_dim, Rng& rng,
                           double scale) {
  if (latent_dim < 1) {
    throw std::invalid_argument("init_encoder: latent_dim < 1");
  }
  LinearEncoder enc;
  enc.weights.resize(latent_dim, input_dim + 1);
  for (int i = 0; i < latent_dim; ++i) {
    for (int j = 0; j <= input_dim; ++j) {
      enc.weights(i, j) = scale * (2.0 * rng.uniform01() - 1.0);
    }
  }
  return enc;
}

EncoderEnv make_env(const TabularMDP& mdp, const Policy& pi_e,
                    const Mat* native_state_features) {
  EncoderEnv env;
  env.n_states = mdp.n_states;
  env.n_actions = mdp.n_actions;
  env.gamma = mdp.gamma;
  env.r_min = mdp.r_min;
  env.r_max = mdp.r_max;
  env.terminal = mdp.terminal;
  env.pi_e = pi_e.probs;
  const int nx = mdp.num_sa();
  if (native_state_features != nullptr) {
    env.inputs.resize(nx, native_state_features->cols());
    for (int i = 0; i < nx; ++i) {
      const int s = i / mdp.n_actions;
      if (s < native_state_features->rows()) {
        env.inputs.row(i) = native_state_features->row(s);
      } else {
        env.inputs.row(i).setZero();  // terminal beyond the feature table
      }
    }
  } else {
    env.inputs = Mat::Identity(nx, nx);
  }
  return env;
}

Mat encode_all(const LinearEncoder& enc, const EncoderEnv& env) {
  return enc.features(env.inputs);
}

Mat expected_state_features(const Mat& phi_all, const EncoderEnv& env) {
  Mat psi = Mat::Zero(env.n_states, phi_all.cols());
  for (int s = 0; s < env.n_states; ++s) {
    if (env.terminal[s]) continue;
    for (int a = 0; a < env.n_actions; ++a) {
      psi.row(s) += env.pi_e(s, a) * phi_all.row(s * env.n_actions + a);
    }
  }
  return psi;
}

void TrainingConfig::validate() const {
  if (learning_rate <= 0.0) {
    throw std::invalid_argument("TrainingConfig: learning_rate <= 0");
  }
  if (epochs < 1 || batch_size < 1 || latent_dim < 1) {
    throw std::invalid_argument("TrainingConfig: non-positive sizes");
  }
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("TrainingConfig: alpha outside [0, 1]");
  }
}

void AdamW::step(Mat& w, const Mat& g) {
  ++t;
  m = beta1 * m + (1.0 - beta1) * g;
  v = beta2 * v.array().matrix() + (1.0 - beta2) * g.cwiseProduct(g);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  w -= lr * weight_decay * w;
  w.array() -= lr * (m.array() / bc1) /
               ((v.array() / bc2).sqrt() + eps);
}

double krope_pair_loss(const LinearEncoder& enc, const LinearEncoder& target,
                       const std::vector<Transition>& batch1,
                       const std::vector<Transition>& batch2,
                       const EncoderEnv& env, Mat* grad,
                       const std::vector<int>* next_a1,
                       const std::vector<int>* next_a2) {
  if (batch1.empty() || batch1.size() != batch2.size()) {
    throw std::invalid_argument("krope_pair_loss: empty or mismatched batch");
  }
  if (env.r_max == env.r_min) {
    throw std::invalid_argument("krope_pair_loss: degenerate reward range");
  }
  const Mat phi = encode_all(enc, env);
  const Mat phi_bar = encode_all(target, env);
  const Mat psi_bar = expected_state_features(phi_bar, env);
  const int d = enc.latent_dim();

  auto next_embedding = [&](const Transition& t, const std::vector<int>* na,
                            std::size_t i) -> Vec {
    if (env.terminal[t.s_next]) return Vec::Zero(d);
    if (na != nullptr && (*na)[i] >= 0) {
      return phi_bar.row(t.s_next * env.n_actions + (*na)[i]).transpose();
    }
    return psi_bar.row(t.s_next).transpose();
  };

  GradScatter scatter(d, env.num_sa());
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(batch1.size());
  for (std::size_t i = 0; i < batch1.size(); ++i) {
    const Transition& t1 = batch1[i];
    const Transition& t2 = batch2[i];
    const int x1 = t1.s * env.n_actions + t1.a;
    const int x2 = t2.s * env.n_actions + t2.a;
    const Vec f1 = phi.row(x1).transpose();
    const Vec f2 = phi.row(x2).transpose();
    const double k_cur = f1.dot(f2);
    const double k_next =
        next_embedding(t1, next_a1, i).dot(next_embedding(t2, next_a2, i));
    const double residual =
        k1_scalar(t1.r, t2.r, env) + env.gamma * k_next - k_cur;
    loss += residual * residual * inv;
    if (grad != nullptr) {
      const double c = -2.0 * residual * inv;
      scatter.add(x1, c * f2);
      scatter.add(x2, c * f1);
    }
  }
  if (grad != nullptr) *grad = scatter.materialize(augmented_inputs(env.inputs));
  return loss;
}

double fqe_loss(const LinearEncoder& enc, const FqeHead& head,
                const LinearEncoder& target_enc, const FqeHead& target_head,
                const std::vector<Transition>& batch, const EncoderEnv& env,
                Mat* grad_enc, Vec* grad_head_w, double* grad_head_b,
                const std::vector<int>* next_a) {
  if (batch.empty()) throw std::invalid_argument("fqe_loss: empty batch");
  const Mat phi = encode_all(enc, env);
  const Mat phi_bar = encode_all(target_enc, env);
  const int d = enc.latent_dim();

  // Frozen value of every state under pi_e (zero at terminals).
  Vec v_bar = Vec::Zero(env.n_states);
  for (int s = 0; s < env.n_states; ++s) {
    if (env.terminal[s]) continue;
    for (int a = 0; a < env.n_actions; ++a) {
      v_bar[s] += env.pi_e(s, a) *
                  (phi_bar.row(s * env.n_actions + a).dot(target_head.w) +
                   target_head.b);
    }
  }

  GradScatter scatter(d, env.num_sa());
  if (grad_head_w != nullptr) grad_head_w->setZero(d);
  if (grad_head_b != nullptr) *grad_head_b = 0.0;
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = batch[i];
    const int x = t.s * env.n_actions + t.a;
    const Vec f = phi.row(x).transpose();
    double bootstrap;
    if (env.terminal[t.s_next]) {
      bootstrap = 0.0;
    } else if (next_a != nullptr && (*next_a)[i] >= 0) {
      bootstrap = phi_bar.row(t.s_next * env.n_actions + (*next_a)[i])
                      .dot(target_head.w) +
                  target_head.b;
    } else {
      bootstrap = v_bar[t.s_next];
    }
    const double residual = t.r + env.gamma * bootstrap - (f.dot(head.w) + head.b);
    loss += residual * residual * inv;
    const double c = -2.0 * residual * inv;
    if (grad_enc != nullptr) scatter.add(x, c * head.w);
    if (grad_head_w != nullptr) *grad_head_w += c * f;
    if (grad_head_b != nullptr) *grad_head_b += c;
  }
  if (grad_enc != nullptr) {
    *grad_enc = scatter.materialize(augmented_inputs(env.inputs));
  }
  return loss;
}

double dr3_penalty(const LinearEncoder& enc,
                   const std::vector<Transition>& batch, const EncoderEnv& env,
                   Mat* grad) {
  if (batch.empty()) throw std::invalid_argument("dr3_penalty: empty batch");
  const Mat phi = encode_all(enc, env);
  const Mat psi = expected_state_features(phi, env);
  const int d = enc.latent_dim();

  GradScatter scatter(d, env.num_sa());
  double penalty = 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const Transition& t : batch) {
    const int x = t.s * env.n_actions + t.a;
    const Vec f = phi.row(x).transpose();
    const Vec nf = psi.row(t.s_next).transpose();
    const double dot = f.dot(nf);
    penalty += std::abs(dot) * inv;
    if (grad != nullptr && dot != 0.0) {
      const double sgn = dot > 0.0 ? inv : -inv;
      scatter.add(x, sgn * nf);
      if (!env.terminal[t.s_next]) {
        for (int a = 0; a < env.n_actions; ++a) {
          scatter.add(t.s_next * env.n_actions + a,
                      sgn * env.pi_e(t.s_next, a) * f);
        }
      }
    }
  }
  if (grad != nullptr) *grad = scatter.materialize(augmented_inputs(env.inputs));
  return penalty;
}

double beer_penalty(const LinearEncoder& enc,
                    const std::vector<Transition>& batch,
                    const EncoderEnv& env, double floor, Mat* grad) {
  if (batch.empty()) throw std::invalid_argument("beer_penalty: empty batch");
  const Mat phi = encode_all(enc, env);
  const Mat psi = expected_state_features(phi, env);
  const int d = enc.latent_dim();

  GradScatter scatter(d, env.num_sa());
  double penalty = 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const Transition& t : batch) {
    const int x = t.s * env.n_actions + t.a;
    const Vec f = phi.row(x).transpose();
    const Vec nf = psi.row(t.s_next).transpose();
    const double gap = floor - f.dot(nf);
    if (gap <= 0.0) continue;
    penalty += gap * gap * inv;
    if (grad != nullptr) {
      const double c = -2.0 * gap * inv;
      scatter.add(x, c * nf);
      if (!env.terminal[t.s_next]) {
        for (int a = 0; a < env.n_actions; ++a) {
          scatter.add(t.s_next * env.n_actions + a,
                      c * env.pi_e(t.s_next, a) * f);
        }
      }
    }
  }
  if (grad != nullptr) *grad = scatter.materialize(augmented_inputs(env.inputs));
  return penalty;
}

BcrlLoss bcrl_losses(const LinearEncoder& enc, const BcrlHeads& heads,
                     const LinearEncoder& target_enc,
                     const std::vector<Transition>& batch,
                     const EncoderEnv& env, double logdet_coeff,
                     Mat* grad_enc, Mat* grad_m, Vec* grad_rho) {
  if (batch.empty()) throw std::invalid_argument("bcrl_losses: empty batch");
  const Mat phi = encode_all(enc, env);
  const Mat phi_bar = encode_all(target_enc, env);
  const Mat psi_bar = expected_state_features(phi_bar, env);
  const int d = enc.latent_dim();
  const double inv = 1.0 / static_cast<double>(batch.size());

  GradScatter scatter(d, env.num_sa());
  if (grad_m != nullptr) grad_m->setZero(d, d);
  if (grad_rho != nullptr) grad_rho->setZero(d);

  BcrlLoss out;
  Mat cov = Mat::Zero(d, d);
  for (const Transition& t : batch) {
    const int x = t.s * env.n_actions + t.a;
    const Vec f = phi.row(x).transpose();
    cov += inv * f * f.transpose();

    const double re = heads.rho.dot(f) - t.r;
    out.reward_loss += re * re * inv;
    if (grad_rho != nullptr) *grad_rho += 2.0 * re * inv * f;
    if (grad_enc != nullptr) scatter.add(x, 2.0 * re * inv * heads.rho);

    const Vec pred_err =
        heads.m * f - env.gamma * psi_bar.row(t.s_next).transpose();
    out.selfpred_loss += pred_err.squaredNorm() * inv;
    if (grad_m != nullptr) *grad_m += 2.0 * inv * pred_err * f.transpose();
    if (grad_enc != nullptr) {
      scatter.add(x, 2.0 * inv * heads.m.transpose() * pred_err);
    }
  }

  if (logdet_coeff != 0.0) {
    constexpr double kEps = 1e-6;
    Mat reg = cov + kEps * Mat::Identity(d, d);
    Eigen::LLT<Mat> llt(reg);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("bcrl_losses: covariance not positive definite");
    }
    double logdet = 0.0;
    for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    out.logdet_term = -logdet_coeff * logdet;
    if (grad_enc != nullptr) {
      const Mat cov_inv = llt.solve(Mat::Identity(d, d));
      for (const Transition& t : batch) {
        const int x = t.s * env.n_actions + t.a;
        scatter.add(x, -logdet_coeff * 2.0 * inv * cov_inv *
                           phi.row(x).transpose());
      }
    }
  }

  if (grad_enc != nullptr) {
    *grad_enc = scatter.materialize(augmented_inputs(env.inputs));
  }
  return out;
}

AuxKind aux_kind_from_string(const std::string& name) {
  if (name == "none") return AuxKind::None;
  if (name == "krope") return AuxKind::Krope;
  if (name == "dr3") return AuxKind::Dr3;
  if (name == "beer") return AuxKind::Beer;
  throw std::invalid_argument("unknown auxiliary task: " + name);
}

namespace {

constexpr std::uint64_t kPairStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kInitStream = 0xbf58476d1ce4e5b9ULL;
constexpr std::uint64_t kActionStream = 0x94d049bb133111ebULL;

std::vector<int> permutation(int n, Rng& rng) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    std::swap(p[i], p[rng.uniform_int(i + 1)]);
  }
  return p;
}

struct TrainSetup {
  const OfflineDataset* primary = nullptr;
  const OfflineDataset* pair_source = nullptr;  // krope partner dataset
  AuxKind aux = AuxKind::None;
  double fqe_weight = 0.0;  // (1 - alpha) for joint, 0 for pure krope
  double aux_weight = 1.0;
  bool bcrl = false;
  bool bcrl_exploration = false;
};

TrainResult train_core(const TrainSetup& setup, const EncoderEnv& env,
                       const TrainingConfig& cfg,
                       const EpochCallback& on_epoch) {
  cfg.validate();
  if (setup.primary->size() == 0) {
    throw std::invalid_argument("train: empty dataset");
  }
  const int d = cfg.latent_dim;
  const int n_in = static_cast<int>(env.inputs.cols());

  Rng rng_init(cfg.seed ^ kInitStream);
  Rng rng_batch(cfg.seed);
  Rng rng_pair(cfg.seed ^ kPairStream);
  Rng rng_action(cfg.seed ^ kActionStream);

  TrainResult res;
  res.encoder = init_encoder(d, n_in, rng_init);
  if (!cfg.use_bias) res.encoder.weights.col(n_in).setZero();
  res.head.w = Vec::Zero(d);
  for (int i = 0; i < d; ++i) res.head.w[i] = 0.1 * (2.0 * rng_init.uniform01() - 1.0);
  res.head.b = 0.0;
  res.bcrl.m = Mat::Zero(d, d);
  res.bcrl.rho = Vec::Zero(d);
  if (setup.bcrl) {
    for (int i = 0; i < d; ++i) {
      res.bcrl.rho[i] = 0.1 * (2.0 * rng_init.uniform01() - 1.0);
      for (int j = 0; j < d; ++j) {
        res.bcrl.m(i, j) = 0.1 * (2.0 * rng_init.uniform01() - 1.0);
      }
    }
  }

  LinearEncoder target_enc = res.encoder;
  FqeHead target_head = res.head;

  AdamW opt_enc(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                cfg.weight_decay, d, n_in + 1);
  AdamW opt_head_w(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                   cfg.weight_decay, d, 1);
  AdamW opt_head_b(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, 0.0, 1,
                   1);
  AdamW opt_m(cfg.bcrl_head_lr, cfg.adam_beta1, cfg.adam_beta2,
              cfg.weight_decay, d, d);
  AdamW opt_rho(cfg.bcrl_head_lr, cfg.adam_beta1, cfg.adam_beta2,
                cfg.weight_decay, d, 1);

  const auto& data = setup.primary->transitions;
  const int n = setup.primary->size();

  auto sample_actions = [&](const std::vector<Transition>& batch) {
    std::vector<int> acts(batch.size(), -1);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (!env.terminal[batch[i].s_next]) {
        acts[i] =
            rng_action.categorical(env.pi_e.row(batch[i].s_next).transpose());
      }
    }
    return acts;
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> perm = permutation(n, rng_batch);
    double epoch_loss = 0.0;
    double epoch_aux = 0.0;
    int n_batches = 0;

    for (int start = 0; start < n; start += cfg.batch_size) {
      const int len = std::min(cfg.batch_size, n - start);
      std::vector<Transition> batch(len);
      for (int i = 0; i < len; ++i) batch[i] = data[perm[start + i]];

      Mat grad = Mat::Zero(d, n_in + 1);
      double loss = 0.0;
      double aux_loss = 0.0;

      if (setup.bcrl) {
        Mat grad_m;
        Vec grad_rho;
        const BcrlLoss bl = bcrl_losses(
            res.encoder, res.bcrl, target_enc, batch, env,
            setup.bcrl_exploration ? cfg.bcrl_logdet_coeff : 0.0, &grad,
            &grad_m, &grad_rho);
        loss = bl.total();
        if (!cfg.use_bias) grad.col(n_in).setZero();
        opt_enc.step(res.encoder.weights, grad);
        opt_m.step(res.bcrl.m, grad_m);
        Mat rho_mat = res.bcrl.rho;
        opt_rho.step(rho_mat, Mat(grad_rho));
        res.bcrl.rho = rho_mat;
        epoch_loss += loss;
        ++n_batches;
        continue;
      }

      if (setup.aux == AuxKind::Krope) {
        std::vector<Transition> partner(len);
        const auto& pdata = setup.pair_source->transitions;
        const int pn = setup.pair_source->size();
        for (int i = 0; i < len; ++i) {
          partner[i] = pdata[rng_pair.uniform_int(pn)];
        }
        std::vector<Transition> b1 = batch;
        std::vector<Transition> b2 = std::move(partner);
        if (cfg.all_pairs) {
          std::vector<Transition> all1, all2;
          all1.reserve(static_cast<std::size_t>(len) * len);
          for (const Transition& t1 : b1) {
            for (const Transition& t2 : b2) {
              all1.push_back(t1);
              all2.push_back(t2);
            }
          }
          b1 = std::move(all1);
          b2 = std::move(all2);
        }
        Mat aux_grad;
        std::vector<int> na1, na2;
        const std::vector<int>* pa1 = nullptr;
        const std::vector<int>* pa2 = nullptr;
        if (cfg.sampled_next_action) {
          na1 = sample_actions(b1);
          na2 = sample_actions(b2);
          pa1 = &na1;
          pa2 = &na2;
        }
        aux_loss = krope_pair_loss(res.encoder, target_enc, b1, b2, env,
                                   &aux_grad, pa1, pa2);
        grad += setup.aux_weight * aux_grad;
      } else if (setup.aux == AuxKind::Dr3) {
        Mat aux_grad;
        aux_loss = dr3_penalty(res.encoder, batch, env, &aux_grad);
        grad += setup.aux_weight * aux_grad;
      } else if (setup.aux == AuxKind::Beer) {
        Mat aux_grad;
        aux_loss =
            beer_penalty(res.encoder, batch, env, cfg.beer_floor, &aux_grad);
        grad += setup.aux_weight * aux_grad;
      }

      Vec grad_head_w = Vec::Zero(d);
      double grad_head_b = 0.0;
      double fqe = 0.0;
      if (setup.fqe_weight > 0.0) {
        Mat fqe_grad;
        std::vector<int> na;
        const std::vector<int>* pa = nullptr;
        if (cfg.sampled_next_action) {
          na = sample_actions(batch);
          pa = &na;
        }
        fqe = fqe_loss(res.encoder, res.head, target_enc, target_head, batch,
                       env, &fqe_grad, &grad_head_w, &grad_head_b, pa);
        grad += setup.fqe_weight * fqe_grad;
        Mat hw = res.head.w;
        opt_head_w.step(hw, Mat(setup.fqe_weight * grad_head_w));
        res.head.w = hw;
        Mat hb = Mat::Constant(1, 1, res.head.b);
        opt_head_b.step(hb, Mat(Mat::Constant(1, 1,
                                              setup.fqe_weight * grad_head_b)));
        res.head.b = hb(0, 0);
      }
      loss = setup.aux_weight * aux_loss + setup.fqe_weight * fqe;
      if (!cfg.use_bias) grad.col(n_in).setZero();
      opt_enc.step(res.encoder.weights, grad);

      epoch_loss += loss;
      epoch_aux += aux_loss;
      ++n_batches;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = epoch_loss / n_batches;
    rec.aux_loss = epoch_aux / n_batches;
    const double enc_norm = res.encoder.weights.lpNorm<Eigen::Infinity>();
    const double head_norm =
        std::max(res.head.w.lpNorm<Eigen::Infinity>(), std::abs(res.head.b));
    rec.param_norm = std::max(enc_norm, head_norm);

    const bool diverged = !std::isfinite(rec.loss) ||
                          !std::isfinite(rec.param_norm) ||
                          rec.loss > cfg.divergence_threshold ||
                          rec.param_norm > cfg.divergence_threshold;
    rec.status = diverged ? TrainStatus::Diverged : TrainStatus::Ok;
    res.trace.push_back(rec);
    if (diverged) {
      res.status = TrainStatus::Diverged;
      break;
    }

    if ((epoch + 1) % cfg.target_update_period == 0) {
      target_enc = res.encoder;
      target_head = res.head;
    }
    if (on_epoch) on_epoch(epoch, res.encoder, res.head);
  }
  return res;
}

}  // namespace

TrainResult train_krope(const OfflineDataset& ds, const EncoderEnv& env,
                        const TrainingConfig& cfg,
                        const EpochCallback& on_epoch) {
  TrainSetup setup;
  setup.primary = &ds;
  setup.pair_source = &ds;
  setup.aux = AuxKind::Krope;
  setup.aux_weight = 1.0;
  setup.fqe_weight = 0.0;
  return train_core(setup, env, cfg, on_epoch);
}

TrainResult train_krope_paired(const OfflineDataset& a,
                               const OfflineDataset& b, const EncoderEnv& env,
                               const TrainingConfig& cfg,
                               const EpochCallback& on_epoch) {
  TrainSetup setup;
  setup.primary = &a;
  setup.pair_source = &b;
  setup.aux = AuxKind::Krope;
  setup.aux_weight = 1.0;
  setup.fqe_weight = 0.0;
  return train_core(setup, env, cfg, on_epoch);
}

TrainResult train_auxiliary(const OfflineDataset& ds, const EncoderEnv& env,
                            const TrainingConfig& cfg, AuxKind aux,
                            const EpochCallback& on_epoch) {
  TrainSetup setup;
  setup.primary = &ds;
  setup.pair_source = &ds;
  setup.aux = aux;
  setup.aux_weight = aux == AuxKind::None ? 0.0 : cfg.alpha;
  setup.fqe_weight = aux == AuxKind::None ? 1.0 : 1.0 - cfg.alpha;
  return train_core(setup, env, cfg, on_epoch);
}

TrainResult train_fqe_krope_paired(const OfflineDataset& a,
                                   const OfflineDataset& b,
                                   const EncoderEnv& env,
                                   const TrainingConfig& cfg,
                                   const EpochCallback& on_epoch) {
  TrainSetup setup;
  setup.primary = &a;
  setup.pair_source = &b;
  setup.aux = AuxKind::Krope;
  setup.aux_weight = cfg.alpha;
  setup.fqe_weight = 1.0 - cfg.alpha;
  return train_core(setup, env, cfg, on_epoch);
}

TrainResult train_bcrl(const OfflineDataset& ds, const EncoderEnv& env,
                       const TrainingConfig& cfg, bool exploration,
                       const EpochCallback& on_epoch) {
  TrainSetup setup;
  setup.primary = &ds;
  setup.bcrl = true;
  setup.bcrl_exploration = exploration;
  return train_core(setup, env, cfg, on_epoch);
}

}  // namespace krope
