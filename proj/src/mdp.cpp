#include "krope/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace krope {

namespace {

constexpr double kStochasticTol = 1e-12;

void check_distribution(const Vec& p, const char* what, double tol) {
  if (p.minCoeff() < -tol) {
    throw std::invalid_argument(std::string(what) + ": negative entry");
  }
  if (std::abs(p.sum() - 1.0) > tol) {
    throw std::invalid_argument(std::string(what) + ": does not sum to 1");
  }
}

}  // namespace

int Rng::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  const std::uint64_t bound = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() %
                                  static_cast<std::uint64_t>(n);
  std::uint64_t x;
  do {
    x = gen_();
  } while (x >= bound);
  return static_cast<int>(x % static_cast<std::uint64_t>(n));
}

int Rng::categorical(const Vec& probs) {
  const double u = uniform01();
  double acc = 0.0;
  for (int i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return static_cast<int>(probs.size()) - 1;
}

void Policy::validate() const {
  if (probs.rows() == 0 || probs.cols() == 0) {
    throw std::invalid_argument("Policy: empty probability matrix");
  }
  if (probs.minCoeff() < 0.0) {
    throw std::invalid_argument("Policy: negative probability");
  }
  for (int s = 0; s < probs.rows(); ++s) {
    if (std::abs(probs.row(s).sum() - 1.0) > kStochasticTol) {
      throw std::invalid_argument("Policy: row does not sum to 1");
    }
  }
}

void TabularMDP::validate() const {
  if (n_states <= 0 || n_actions <= 0) {
    throw std::invalid_argument("TabularMDP: non-positive dimensions");
  }
  const int nx = num_sa();
  if (rewards.size() != nx || transitions.rows() != nx ||
      transitions.cols() != n_states || d0.size() != n_states ||
      static_cast<int>(terminal.size()) != n_states) {
    throw std::invalid_argument("TabularMDP: inconsistent shapes");
  }
  if (rewards.minCoeff() < r_min - kStochasticTol ||
      rewards.maxCoeff() > r_max + kStochasticTol) {
    throw std::invalid_argument("TabularMDP: reward outside declared bounds");
  }
  if (gamma < 0.0 || gamma > 1.0) {
    throw std::invalid_argument("TabularMDP: gamma outside [0, 1]");
  }
  for (int i = 0; i < nx; ++i) {
    if (transitions.row(i).minCoeff() < -kStochasticTol ||
        std::abs(transitions.row(i).sum() - 1.0) > kStochasticTol) {
      throw std::invalid_argument("TabularMDP: transition row not stochastic");
    }
  }
  check_distribution(d0, "TabularMDP d0", kStochasticTol);
  for (int s = 0; s < n_states; ++s) {
    if (!terminal[s]) continue;
    for (int a = 0; a < n_actions; ++a) {
      const int i = sa_index(s, a);
      if (rewards[i] != 0.0 ||
          std::abs(transitions(i, s) - 1.0) > kStochasticTol) {
        throw std::invalid_argument(
            "TabularMDP: terminal state must self-loop with zero reward");
      }
    }
  }
}

Mat pi_transition_matrix(const TabularMDP& mdp, const Policy& pi) {
  if (pi.probs.rows() != mdp.n_states || pi.probs.cols() != mdp.n_actions) {
    throw std::invalid_argument("pi_transition_matrix: shape mismatch");
  }
  const int nx = mdp.num_sa();
  Mat p(nx, nx);
  for (int i = 0; i < nx; ++i) {
    for (int sj = 0; sj < mdp.n_states; ++sj) {
      const double ps = mdp.transitions(i, sj);
      for (int aj = 0; aj < mdp.n_actions; ++aj) {
        p(i, mdp.sa_index(sj, aj)) = ps * pi.probs(sj, aj);
      }
    }
  }
  return p;
}

Vec exact_q(const TabularMDP& mdp, const Policy& pi) {
  const int nx = mdp.num_sa();
  const Mat p = pi_transition_matrix(mdp, pi);

  std::vector<int> live;
  live.reserve(nx);
  for (int i = 0; i < nx; ++i) {
    if (!mdp.sa_terminal(i)) live.push_back(i);
  }
  const int m = static_cast<int>(live.size());

  Vec q = Vec::Zero(nx);
  if (m > 0) {
    Mat a = Mat::Identity(m, m);
    Vec b(m);
    for (int u = 0; u < m; ++u) {
      b[u] = mdp.rewards[live[u]];
      for (int v = 0; v < m; ++v) {
        a(u, v) -= mdp.gamma * p(live[u], live[v]);
      }
    }
    const Vec sol = a.colPivHouseholderQr().solve(b);
    for (int u = 0; u < m; ++u) q[live[u]] = sol[u];
  }

  const double residual = (q - mdp.rewards - mdp.gamma * p * q)
                              .lpNorm<Eigen::Infinity>();
  if (!std::isfinite(residual) || residual > 1e-10) {
    throw std::runtime_error(
        "exact_q: Bellman system unsolvable (residual " +
        std::to_string(residual) + ")");
  }
  return q;
}

TabularMDP generate_garnet(int n_states, int n_actions, int branching,
                           std::uint64_t seed, double gamma) {
  if (branching < 1 || branching > n_states) {
    throw std::invalid_argument("generate_garnet: branching out of range");
  }
  Rng rng(seed);
  TabularMDP mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  mdp.seed = seed;
  mdp.terminal.assign(n_states, false);
  mdp.d0 = Vec::Constant(n_states, 1.0 / n_states);
  const int nx = n_states * n_actions;
  mdp.rewards = Vec::Zero(nx);
  mdp.transitions = Mat::Zero(nx, n_states);

  std::vector<int> pool(n_states);
  for (int i = 0; i < nx; ++i) {
    // Distinct successors by partial Fisher-Yates.
    std::iota(pool.begin(), pool.end(), 0);
    for (int k = 0; k < branching; ++k) {
      const int j = k + rng.uniform_int(n_states - k);
      std::swap(pool[k], pool[j]);
    }
    // Simplex-uniform probabilities from sorted cut points.
    std::vector<double> cuts(branching + 1);
    cuts.front() = 0.0;
    cuts.back() = 1.0;
    for (int k = 1; k < branching; ++k) cuts[k] = rng.uniform01();
    std::sort(cuts.begin(), cuts.end());
    for (int k = 0; k < branching; ++k) {
      mdp.transitions(i, pool[k]) = cuts[k + 1] - cuts[k];
    }
    mdp.rewards[i] = rng.uniform(-1.0, 1.0);
  }
  mdp.validate();
  return mdp;
}

CounterexampleMRP counterexample_mrp(double p_loop, const Vec* rewards) {
  if (p_loop < 0.0 || p_loop >= 1.0) {
    // p_loop = 1 would make the doubled-feature state absorbing and the MRP
    // non-proper at gamma = 1.
    throw std::invalid_argument("counterexample_mrp: p_loop outside [0, 1)");
  }
  Vec r(4);
  if (rewards != nullptr) {
    if (rewards->size() != 4) {
      throw std::invalid_argument("counterexample_mrp: need 4 rewards");
    }
    r = *rewards;
  } else {
    r << -0.2, 1.0, 0.0, 0.0;
  }

  CounterexampleMRP ce;
  ce.features.resize(4, 3);
  ce.features << 1, 0, 0,  //
      0, 1, 0,             //
      0, 0, 2,             //
      0, 0, 1;

  TabularMDP& m = ce.mdp;
  m.n_states = 5;
  m.n_actions = 1;
  m.gamma = 1.0;
  m.terminal = {false, false, false, false, true};
  // Trajectories start at state 0, so the doubled-feature chain (states 2, 3)
  // is reached only through injected off-distribution transitions.
  m.d0 = Vec::Zero(5);
  m.d0[0] = 1.0;
  m.rewards = Vec::Zero(5);
  m.rewards.head(4) = r;
  m.transitions = Mat::Zero(5, 5);
  m.transitions(0, 1) = 1.0;             // w1 -> w2
  m.transitions(1, 4) = 1.0;             // w2 -> terminal
  m.transitions(2, 2) = p_loop;          // 2w3 -> 2w3 (self-loop)
  m.transitions(2, 4) = 1.0 - p_loop;    // 2w3 -> terminal
  m.transitions(3, 2) = 1.0;             // w3 -> 2w3
  m.transitions(4, 4) = 1.0;             // terminal self-loop
  m.validate();

  // The default construction must be Bellman-consistent with the realizable
  // value vector [0.8, 1, 0, 0]; caller-supplied rewards define their own
  // value vector.
  if (rewards == nullptr) {
    Vec target(5);
    target << 0.8, 1.0, 0.0, 0.0, 0.0;
    const Vec residual = target - m.rewards - m.transitions * target;
    if (residual.lpNorm<Eigen::Infinity>() > 1e-10) {
      throw std::invalid_argument(
          "counterexample_mrp: parameters inconsistent with realizable "
          "values");
    }
  }
  return ce;
}

Vec stationary_distribution(const Mat& p_pi, double tol, int max_iters) {
  const int nx = static_cast<int>(p_pi.rows());
  Vec mu = Vec::Constant(nx, 1.0 / nx);
  for (int it = 0; it < max_iters; ++it) {
    Vec next = p_pi.transpose() * mu;
    next /= next.sum();
    if ((next - mu).lpNorm<Eigen::Infinity>() <= tol) return next;
    mu = next;
  }
  return Vec::Constant(nx, 1.0 / nx);
}

OfflineDataset sample_dataset(const TabularMDP& mdp, const Policy& behavior,
                              int size, std::uint64_t seed) {
  if (size < 1) throw std::invalid_argument("sample_dataset: size < 1");
  const Mat p = pi_transition_matrix(mdp, behavior);
  const Vec mu_exact = stationary_distribution(p);

  Rng rng(seed);
  OfflineDataset ds;
  ds.transitions.reserve(size);
  Vec counts = Vec::Zero(mdp.num_sa());
  for (int n = 0; n < size; ++n) {
    const int i = rng.categorical(mu_exact);
    const auto [s, a] = mdp.sa_pair(i);
    const int s_next = rng.categorical(mdp.transitions.row(i).transpose());
    ds.transitions.push_back({s, a, mdp.rewards[i], s_next});
    counts[i] += 1.0;
  }
  ds.mu = counts / counts.sum();
  return ds;
}

OfflineDataset synthetic_dataset(std::vector<Transition> tuples, int n_states,
                                 int n_actions, const TabularMDP* mdp) {
  if (tuples.empty()) {
    throw std::invalid_argument("synthetic_dataset: empty tuple list");
  }
  const int nx = n_states * n_actions;
  Vec counts = Vec::Zero(nx);
  for (const Transition& t : tuples) {
    if (t.s < 0 || t.s >= n_states || t.a < 0 || t.a >= n_actions ||
        t.s_next < 0 || t.s_next >= n_states) {
      throw std::invalid_argument("synthetic_dataset: index out of range");
    }
    const int i = t.s * n_actions + t.a;
    if (mdp != nullptr && std::abs(t.r - mdp->rewards[i]) > 1e-12) {
      throw std::invalid_argument(
          "synthetic_dataset: reward inconsistent with MDP");
    }
    counts[i] += 1.0;
  }
  OfflineDataset ds;
  ds.transitions = std::move(tuples);
  ds.mu = counts / counts.sum();
  return ds;
}

Policy uniform_policy(int n_states, int n_actions) {
  Policy pi;
  pi.probs = Mat::Constant(n_states, n_actions, 1.0 / n_actions);
  return pi;
}

Vec optimal_q(const TabularMDP& mdp, double tol, int max_iters) {
  const int nx = mdp.num_sa();
  Vec q = Vec::Zero(nx);
  for (int it = 0; it < max_iters; ++it) {
    Vec v(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < mdp.n_actions; ++a) {
        best = std::max(best, q[mdp.sa_index(s, a)]);
      }
      v[s] = mdp.terminal[s] ? 0.0 : best;
    }
    Vec next = mdp.rewards + mdp.gamma * mdp.transitions * v;
    for (int i = 0; i < nx; ++i) {
      if (mdp.sa_terminal(i)) next[i] = 0.0;
    }
    if ((next - q).lpNorm<Eigen::Infinity>() <= tol) return next;
    q = next;
  }
  throw std::runtime_error("optimal_q: value iteration did not converge");
}

Policy softmax_policy(const TabularMDP& mdp, const Vec& q, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("softmax_policy: tau <= 0");
  Policy pi;
  pi.probs.resize(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    Vec logits(mdp.n_actions);
    for (int a = 0; a < mdp.n_actions; ++a) {
      logits[a] = q[mdp.sa_index(s, a)] / tau;
    }
    logits.array() -= logits.maxCoeff();
    Vec ex = logits.array().exp();
    pi.probs.row(s) = (ex / ex.sum()).transpose();
  }
  return pi;
}

namespace {

// Largest-remainder rounding of total * weights to integer counts.
std::vector<int> apportion(const std::vector<double>& weights, int total) {
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  std::vector<int> counts(weights.size(), 0);
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = total * weights[i] / wsum;
    counts[i] = static_cast<int>(std::floor(exact));
    assigned += counts[i];
    remainders.push_back({exact - counts[i], static_cast<int>(i)});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; k < total - assigned; ++k) {
    counts[remainders[k].second] += 1;
  }
  return counts;
}

}  // namespace

std::vector<Transition> counterexample_on_policy(const CounterexampleMRP& ce,
                                                 int total) {
  const TabularMDP& m = ce.mdp;
  // Occupancy of non-terminal states: nu = (I - P_NN^T)^-1 d0.
  const Mat p_nn = m.transitions.topLeftCorner(4, 4);
  const Vec nu =
      (Mat::Identity(4, 4) - p_nn.transpose()).colPivHouseholderQr().solve(
          Vec(m.d0.head(4)));

  std::vector<double> weights;
  std::vector<Transition> proto;
  for (int s = 0; s < 4; ++s) {
    for (int sn = 0; sn < 5; ++sn) {
      const double w = nu[s] * m.transitions(s, sn);
      if (w > 0.0) {
        weights.push_back(w);
        proto.push_back({s, 0, m.rewards[s], sn});
      }
    }
  }
  const std::vector<int> counts = apportion(weights, total);
  std::vector<Transition> out;
  out.reserve(total);
  for (std::size_t k = 0; k < proto.size(); ++k) {
    out.insert(out.end(), counts[k], proto[k]);
  }
  return out;
}

std::vector<Transition> counterexample_from_state(const CounterexampleMRP& ce,
                                                  int state, int total) {
  if (state < 0 || state >= 4) {
    throw std::invalid_argument("counterexample_from_state: bad state");
  }
  const TabularMDP& m = ce.mdp;
  std::vector<double> weights;
  std::vector<Transition> proto;
  for (int sn = 0; sn < 5; ++sn) {
    if (m.transitions(state, sn) > 0.0) {
      weights.push_back(m.transitions(state, sn));
      proto.push_back({state, 0, m.rewards[state], sn});
    }
  }
  const std::vector<int> counts = apportion(weights, total);
  std::vector<Transition> out;
  out.reserve(total);
  for (std::size_t k = 0; k < proto.size(); ++k) {
    out.insert(out.end(), counts[k], proto[k]);
  }
  return out;
}

}  // namespace krope
