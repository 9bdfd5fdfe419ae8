#include "krope/lspe.hpp"

#include <cmath>
#include <stdexcept>

namespace krope {

void LspeProblem::validate() const {
  if (phi.rows() != phi_next.rows() || phi.cols() != phi_next.cols() ||
      rewards.size() != phi.rows()) {
    throw std::invalid_argument("LspeProblem: shape mismatch");
  }
  if (phi.cols() < 1) throw std::invalid_argument("LspeProblem: d < 1");
  if (!phi.allFinite() || !phi_next.allFinite() || !rewards.allFinite()) {
    throw std::invalid_argument("LspeProblem: non-finite entries");
  }
}

LspeProblem dataset_problem(const OfflineDataset& ds, const LinearEncoder& enc,
                            const EncoderEnv& env,
                            const std::vector<int>* next_a) {
  const Mat phi_all = encode_all(enc, env);
  const Mat psi = expected_state_features(phi_all, env);
  const int n = ds.size();
  const int d = enc.latent_dim();
  LspeProblem p;
  p.phi.resize(n, d);
  p.phi_next.resize(n, d);
  p.rewards.resize(n);
  for (int i = 0; i < n; ++i) {
    const Transition& t = ds.transitions[i];
    p.phi.row(i) = phi_all.row(t.s * env.n_actions + t.a);
    if (env.terminal[t.s_next]) {
      p.phi_next.row(i).setZero();
    } else if (next_a != nullptr && (*next_a)[i] >= 0) {
      p.phi_next.row(i) = phi_all.row(t.s_next * env.n_actions + (*next_a)[i]);
    } else {
      p.phi_next.row(i) = psi.row(t.s_next);
    }
    p.rewards[i] = t.r;
  }
  p.validate();
  return p;
}

LspeProblem exact_problem(const TabularMDP& mdp, const Policy& pi_e,
                          const Mat& phi_all) {
  if (phi_all.rows() != mdp.num_sa()) {
    throw std::invalid_argument("exact_problem: feature row count mismatch");
  }
  const int nx = mdp.num_sa();
  const int d = static_cast<int>(phi_all.cols());
  Mat psi = Mat::Zero(mdp.n_states, d);
  for (int s = 0; s < mdp.n_states; ++s) {
    if (mdp.terminal[s]) continue;
    for (int a = 0; a < mdp.n_actions; ++a) {
      psi.row(s) += pi_e.probs(s, a) * phi_all.row(mdp.sa_index(s, a));
    }
  }
  LspeProblem p;
  p.phi = phi_all;
  p.phi_next = mdp.transitions * psi;
  p.rewards = mdp.rewards;
  for (int i = 0; i < nx; ++i) {
    if (mdp.sa_terminal(i)) {
      p.phi_next.row(i).setZero();
      p.rewards[i] = 0.0;
    }
  }
  p.validate();
  return p;
}

Mat pseudo_inverse(const Mat& m, double cutoff, bool* rank_deficient) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double thresh = sv.size() > 0 ? cutoff * sv[0] : 0.0;
  Vec inv = Vec::Zero(sv.size());
  bool deficient = false;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] > thresh && sv[i] > 0.0) {
      inv[i] = 1.0 / sv[i];
    } else {
      deficient = true;
    }
  }
  if (rank_deficient != nullptr) *rank_deficient = deficient;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Vec lspe_iterate(const LspeProblem& problem, const Vec& theta, double gamma) {
  problem.validate();
  const double n = static_cast<double>(problem.rows());
  const Mat cov = problem.phi.transpose() * problem.phi / n;
  const Vec target =
      problem.phi.transpose() *
      (problem.rewards + gamma * problem.phi_next * theta) / n;
  return pseudo_inverse(cov) * target;
}

LspeResult lspe_solve(const LspeProblem& problem, const Vec& theta0,
                      double gamma, int max_iters, double tol,
                      double divergence_threshold) {
  problem.validate();
  const double n = static_cast<double>(problem.rows());
  const Mat cov_pinv =
      pseudo_inverse(problem.phi.transpose() * problem.phi / n);
  const Mat update = gamma * cov_pinv *
                     (problem.phi.transpose() * problem.phi_next) / n;
  const Vec base = cov_pinv * (problem.phi.transpose() * problem.rewards) / n;

  LspeResult res;
  res.theta = theta0;
  for (int it = 0; it < max_iters; ++it) {
    const Vec next = base + update * res.theta;
    const double delta = (next - res.theta).lpNorm<Eigen::Infinity>();
    res.theta = next;
    LspeIterRecord rec;
    rec.iter = it;
    rec.theta_norm = res.theta.lpNorm<Eigen::Infinity>();
    rec.delta_norm = delta;
    res.trace.push_back(rec);
    if (!res.theta.allFinite() || rec.theta_norm > divergence_threshold) {
      res.status = LspeStatus::Diverged;
      return res;
    }
    if (delta <= tol) {
      res.status = LspeStatus::Converged;
      return res;
    }
  }
  res.status = LspeStatus::Maxed;
  return res;
}

TdSolution td_fixed_point(const LspeProblem& problem, double gamma) {
  problem.validate();
  const Mat a = problem.phi.transpose() *
                (problem.phi - gamma * problem.phi_next);
  const Vec b = problem.phi.transpose() * problem.rewards;
  TdSolution sol;
  sol.theta = pseudo_inverse(a, 1e-10, &sol.rank_deficient) * b;
  return sol;
}

}  // namespace krope
