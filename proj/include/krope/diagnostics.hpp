#pragma once

#include "krope/mdp.hpp"

#include <string>

namespace krope {

struct DiagnosticsReport {
  double spectral_radius = 0.0;
  bool is_stable = false;
  double condition_number = 0.0;
  bool condition_infinite = false;
  double coadaptation = 0.0;
  double realizability_error = 0.0;
  double ortho_value_correlation = 0.0;
  bool correlation_degenerate = false;
  int zero_norm_rows = 0;
  double msve_normalized = 0.0;
  double bc_proxy_loss = 0.0;

  static std::string csv_header();
  std::string csv_row() const;
};

// Largest eigenvalue magnitude of pinv(Phi^T Phi) * (gamma Phi^T Phi_next)
// over the complex spectrum.
double stability_spectral_radius(const Mat& phi, const Mat& phi_next,
                                 double gamma);

// sigma_max / sigma_min of Phi^T Phi; infinite flag when
// sigma_min < 1e-14 * sigma_max.
double condition_number(const Mat& phi, bool* infinite = nullptr);

// Mean over rows of <phi_i, phi_next_i>.
double feature_coadaptation(const Mat& phi, const Mat& phi_next);

// Least-squares residual ||Phi w - q||^2 divided by (1/|X|) sum |q_i|.
double realizability_error(const Mat& phi_allX, const Vec& q_exact);

// Pearson correlation over unordered pairs between feature orthogonality
// 1 - |<phi_x, phi_y>| / (||phi_x|| ||phi_y||) and |q(x) - q(y)|. Zero-norm
// rows are excluded (count reported); zero variance returns 0 with a flag.
double ortho_value_correlation(const Mat& phi_allX, const Vec& q_exact,
                               bool* degenerate = nullptr,
                               int* zero_norm_rows = nullptr);

// Weighted mean squared gap between value estimates.
double msve(const Vec& q_hat, const Vec& q_exact, const Vec& weights);

// msve(q_hat, q_exact) / msve(q of the uniform-random policy, q_exact).
double normalized_msve(const Vec& q_hat, const Vec& q_exact,
                       const Vec& q_random, const Vec& weights);

// Optimal residual of jointly fitting M: phi -> gamma * expected-next
// features and rho: phi -> rewards by one least-squares solve.
double bc_proxy_loss(const Mat& phi, const Mat& phi_next, const Vec& rewards,
                     double gamma);

// Full report for features over all state-actions with exact on-policy
// expectations.
DiagnosticsReport diagnose(const TabularMDP& mdp, const Policy& pi_e,
                           const Mat& phi_all, const Vec& q_exact_pi,
                           const Vec& q_random, const Vec& weights);

}  // namespace krope
