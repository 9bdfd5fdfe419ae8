#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace krope {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Deterministic RNG wrapper. All randomness in the library flows through
// this so that a seed pins the exact output independent of the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  int uniform_int(int n);

  // Index sampled from an (unnormalized is not allowed) probability vector.
  int categorical(const Vec& probs);

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

struct Policy {
  Mat probs;  // n_states x n_actions, rows sum to 1

  void validate() const;
};

struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  Vec rewards;      // length n_states * n_actions
  Mat transitions;  // (n_states * n_actions) x n_states, row-stochastic
  double gamma = 0.99;
  Vec d0;                      // initial state distribution
  std::vector<bool> terminal;  // terminal states self-loop with zero reward
  double r_min = -1.0;
  double r_max = 1.0;
  std::optional<std::uint64_t> seed;

  int num_sa() const { return n_states * n_actions; }
  int sa_index(int s, int a) const { return s * n_actions + a; }
  std::pair<int, int> sa_pair(int i) const {
    return {i / n_actions, i % n_actions};
  }
  bool sa_terminal(int i) const { return terminal[i / n_actions]; }

  void validate() const;
};

struct Transition {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;
};

struct OfflineDataset {
  std::vector<Transition> transitions;
  Vec mu;  // empirical distribution over state-actions, length |X|

  int size() const { return static_cast<int>(transitions.size()); }
};

// Transition matrix of the Markov chain on state-actions induced by pi:
// entry (i, j) = P(s_j | s_i, a_i) * pi(a_j | s_j).
Mat pi_transition_matrix(const TabularMDP& mdp, const Policy& pi);

// Action-values of pi by direct linear solve of the Bellman equation.
// Terminal state-actions are fixed at zero; gamma = 1 requires absorption
// into terminal states.
Vec exact_q(const TabularMDP& mdp, const Policy& pi);

// Randomly generated MDP: `branching` distinct next states per state-action,
// simplex-uniform probabilities, rewards uniform on [-1, 1].
TabularMDP generate_garnet(int n_states, int n_actions, int branching,
                           std::uint64_t seed, double gamma = 0.99);

// Four-state absorbing MRP with one action, gamma = 1, and fixed native
// features chosen so the exact values are realizable with weights
// [0.8, 1, 0]. State order: w1, w2, 2w3, w3, then the terminal state.
// `p_loop` is the 2w3 self-loop probability (2w3 otherwise terminates);
// w3 moves to 2w3 deterministically and trajectories start at w1.
struct CounterexampleMRP {
  TabularMDP mdp;
  Mat features;  // 4 x 3 native state features (non-terminal states)
};
CounterexampleMRP counterexample_mrp(double p_loop = 0.7,
                                     const Vec* rewards = nullptr);

// I.i.d. transition draws from the stationary distribution of the behavior
// policy's chain (uniform fallback when power iteration does not converge).
OfflineDataset sample_dataset(const TabularMDP& mdp, const Policy& behavior,
                              int size, std::uint64_t seed);

// Dataset from hand-specified tuples; rewards validated against the MDP when
// one is supplied.
OfflineDataset synthetic_dataset(std::vector<Transition> tuples, int n_states,
                                 int n_actions,
                                 const TabularMDP* mdp = nullptr);

// Stationary distribution over state-actions of the chain p_pi via power
// iteration; returns uniform when it fails to converge.
Vec stationary_distribution(const Mat& p_pi, double tol = 1e-10,
                            int max_iters = 100000);

Policy uniform_policy(int n_states, int n_actions);

// Optimal action-values by value iteration (used to construct target
// policies for Garnet experiments).
Vec optimal_q(const TabularMDP& mdp, double tol = 1e-12,
              int max_iters = 1000000);

// Target policy: softmax of q* with temperature tau.
Policy softmax_policy(const TabularMDP& mdp, const Vec& q, double tau);

// On-policy transition counts of the counterexample MRP distributed by exact
// occupancy (largest-remainder rounding to `total` tuples).
std::vector<Transition> counterexample_on_policy(const CounterexampleMRP& ce,
                                                 int total);

// `total` transitions out of a single state of the counterexample MRP, split
// across next states by the exact transition probabilities.
std::vector<Transition> counterexample_from_state(const CounterexampleMRP& ce,
                                                  int state, int total);

}  // namespace krope
