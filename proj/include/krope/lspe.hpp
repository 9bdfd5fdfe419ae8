#pragma once

#include "krope/encoder.hpp"
#include "krope/mdp.hpp"

#include <vector>

namespace krope {

// Linear evaluation problem over dataset rows: features of (s, a), expected
// next features E_{a' ~ pi_e}[phi(s', a')] (zero rows after terminals), and
// rewards.
struct LspeProblem {
  Mat phi;       // |D| x d
  Mat phi_next;  // |D| x d
  Vec rewards;   // |D|

  int rows() const { return static_cast<int>(phi.rows()); }
  int dim() const { return static_cast<int>(phi.cols()); }
  void validate() const;
};

// Problem over dataset transitions with a trained encoder. Sampled next
// actions (one per row, -1 = exact expectation) exist behind a flag.
LspeProblem dataset_problem(const OfflineDataset& ds, const LinearEncoder& enc,
                            const EncoderEnv& env,
                            const std::vector<int>* next_a = nullptr);

// Problem over every state-action with exact on-policy expectations:
// phi_next row i = sum_{s'} P(s'|x_i) sum_{a'} pi_e(a'|s') phi(s', a').
LspeProblem exact_problem(const TabularMDP& mdp, const Policy& pi_e,
                          const Mat& phi_all);

// One update: theta' = pinv(Phi^T Phi / n) Phi^T (r + gamma Phi_next theta)/n.
Vec lspe_iterate(const LspeProblem& problem, const Vec& theta, double gamma);

enum class LspeStatus { Converged, Maxed, Diverged };

struct LspeIterRecord {
  int iter = 0;
  double theta_norm = 0.0;
  double delta_norm = 0.0;
};

struct LspeResult {
  Vec theta;
  std::vector<LspeIterRecord> trace;
  LspeStatus status = LspeStatus::Maxed;
};

LspeResult lspe_solve(const LspeProblem& problem, const Vec& theta0,
                      double gamma, int max_iters = 10000, double tol = 1e-10,
                      double divergence_threshold = 1e12);

struct TdSolution {
  Vec theta;
  bool rank_deficient = false;
};

// Direct solve of (Phi^T Phi - gamma Phi^T Phi_next) theta = Phi^T r.
TdSolution td_fixed_point(const LspeProblem& problem, double gamma);

// Moore-Penrose pseudo-inverse with singular values below cutoff * sigma_max
// treated as zero.
Mat pseudo_inverse(const Mat& m, double cutoff = 1e-10,
                   bool* rank_deficient = nullptr);

}  // namespace krope
