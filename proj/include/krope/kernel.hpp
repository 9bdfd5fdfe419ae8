#pragma once

#include "krope/mdp.hpp"

#include <vector>

namespace krope {

struct KernelMatrix {
  Mat entries;  // symmetric |X| x |X|
  double psd_tolerance = 1e-8;

  // Throws if asymmetric beyond 1e-12 or indefinite beyond psd_tolerance.
  void validate() const;
  double min_eigenvalue() const;
};

// Short-term similarity: entry (i, j) = 1 - |r_i - r_j| / |r_max - r_min|.
KernelMatrix k1_matrix(const Vec& rewards, double r_max, double r_min);

// One application of the similarity operator: K1 + gamma * P K P^T.
Mat apply_krope_operator(const Mat& k, const Mat& k1, const Mat& p_pi,
                         double gamma);

// Fixed point of the operator by iteration from k = 0 (or a caller-supplied
// start). Converged when the sup-norm change is <= tol.
KernelMatrix krope_fixed_point(const Mat& k1, const Mat& p_pi, double gamma,
                               double tol = 1e-10, int max_iters = -1,
                               const Mat* start = nullptr);

// Induced squared distance d(x, y) = k(x,x) + k(y,y) - 2 k(x,y), with small
// negative values clamped to zero.
Mat induced_distance(const KernelMatrix& k);

// p^T K p + q^T K q - 2 p^T K q, clamped at zero from below at -1e-12.
double mmd_squared(const KernelMatrix& k, const Vec& p, const Vec& q);

// Symmetric eigendecomposition factorization Phi with Phi Phi^T ~= K.
// Eigenvalues below rank_tol * lambda_max are dropped, negatives clamped;
// max_rank >= 1 additionally truncates to the leading eigenvalues.
Mat factorize_kernel(const KernelMatrix& k, double rank_tol = 1e-12,
                     int max_rank = -1);

struct Abstraction {
  std::vector<int> labels;
  double tolerance = 0.0;
  int n_groups = 0;
  double max_within_group_distance = 0.0;
};

// Union-find closure of pairs with d(x, y) <= tol.
Abstraction bisim_partition(const Mat& d, double tol = 1e-8);

struct ValueBound {
  Mat bound;    // C(x, y) truncated at N terms
  double tail;  // analytic tail bound for the dropped terms
};

// Additive constant of the value-difference bound
// |q(x) - q(y)| <= d(x, y) + C(x, y) + tail.
ValueBound value_difference_bound(const TabularMDP& mdp, const Policy& pi,
                                  const KernelMatrix& k, int truncation_n);

// Exact kernel restricted to dataset rows (empirical mode).
Mat kernel_on_dataset(const KernelMatrix& k, const OfflineDataset& ds,
                      int n_actions);

}  // namespace krope
