#include "krope/diagnostics.hpp"

#include "krope/lspe.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace krope {

std::string DiagnosticsReport::csv_header() {
  return "spectral_radius,is_stable,condition_number,condition_infinite,"
         "coadaptation,realizability_error,ortho_value_correlation,"
         "correlation_degenerate,zero_norm_rows,msve_normalized,bc_proxy_loss";
}

std::string DiagnosticsReport::csv_row() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%.17g,%d,%.17g,%d,%.17g,%.17g,%.17g,%d,%d,%.17g,%.17g",
                spectral_radius, is_stable ? 1 : 0, condition_number,
                condition_infinite ? 1 : 0, coadaptation, realizability_error,
                ortho_value_correlation, correlation_degenerate ? 1 : 0,
                zero_norm_rows, msve_normalized, bc_proxy_loss);
  return std::string(buf);
}

double stability_spectral_radius(const Mat& phi, const Mat& phi_next,
                                 double gamma) {
  if (phi.cols() != phi_next.cols() || phi.rows() != phi_next.rows()) {
    throw std::invalid_argument("stability_spectral_radius: shape mismatch");
  }
  if (gamma == 0.0) return 0.0;
  const Mat a =
      pseudo_inverse(phi.transpose() * phi) *
      (gamma * phi.transpose() * phi_next);
  Eigen::EigenSolver<Mat> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double condition_number(const Mat& phi, bool* infinite) {
  const Mat cov = phi.transpose() * phi;
  Eigen::JacobiSVD<Mat> svd(cov);
  const Vec& sv = svd.singularValues();
  const double smax = sv[0];
  const double smin = sv[sv.size() - 1];
  if (infinite != nullptr) *infinite = false;
  if (smin < 1e-14 * smax || smin == 0.0) {
    if (infinite != nullptr) *infinite = true;
    return std::numeric_limits<double>::infinity();
  }
  return smax / smin;
}

double feature_coadaptation(const Mat& phi, const Mat& phi_next) {
  if (phi.rows() != phi_next.rows() || phi.cols() != phi_next.cols()) {
    throw std::invalid_argument("feature_coadaptation: shape mismatch");
  }
  return phi.cwiseProduct(phi_next).sum() / static_cast<double>(phi.rows());
}

double realizability_error(const Mat& phi_allX, const Vec& q_exact) {
  if (phi_allX.rows() != q_exact.size()) {
    throw std::invalid_argument("realizability_error: shape mismatch");
  }
  const Vec w = pseudo_inverse(phi_allX) * q_exact;
  const double resid = (phi_allX * w - q_exact).squaredNorm();
  const double scale =
      q_exact.cwiseAbs().sum() / static_cast<double>(q_exact.size());
  if (scale == 0.0) return resid;
  return resid / scale;
}

double ortho_value_correlation(const Mat& phi_allX, const Vec& q_exact,
                               bool* degenerate, int* zero_norm_rows) {
  if (phi_allX.rows() != q_exact.size()) {
    throw std::invalid_argument("ortho_value_correlation: shape mismatch");
  }
  const int n = static_cast<int>(phi_allX.rows());
  std::vector<int> keep;
  keep.reserve(n);
  int zeros = 0;
  for (int i = 0; i < n; ++i) {
    if (phi_allX.row(i).norm() > 0.0) {
      keep.push_back(i);
    } else {
      ++zeros;
    }
  }
  if (zero_norm_rows != nullptr) *zero_norm_rows = zeros;
  if (degenerate != nullptr) *degenerate = false;

  double so = 0.0, sv = 0.0, soo = 0.0, svv = 0.0, sov = 0.0;
  long count = 0;
  for (std::size_t ii = 0; ii < keep.size(); ++ii) {
    const int i = keep[ii];
    const double ni = phi_allX.row(i).norm();
    for (std::size_t jj = ii + 1; jj < keep.size(); ++jj) {
      const int j = keep[jj];
      const double o = 1.0 - std::abs(phi_allX.row(i).dot(phi_allX.row(j))) /
                                 (ni * phi_allX.row(j).norm());
      const double v = std::abs(q_exact[i] - q_exact[j]);
      so += o;
      sv += v;
      soo += o * o;
      svv += v * v;
      sov += o * v;
      ++count;
    }
  }
  if (count < 2) {
    if (degenerate != nullptr) *degenerate = true;
    return 0.0;
  }
  const double nn = static_cast<double>(count);
  const double var_o = soo - so * so / nn;
  const double var_v = svv - sv * sv / nn;
  if (var_o <= 0.0 || var_v <= 0.0) {
    if (degenerate != nullptr) *degenerate = true;
    return 0.0;
  }
  double r = (sov - so * sv / nn) / std::sqrt(var_o * var_v);
  return std::min(1.0, std::max(-1.0, r));
}

double msve(const Vec& q_hat, const Vec& q_exact, const Vec& weights) {
  if (q_hat.size() != q_exact.size() || weights.size() != q_exact.size()) {
    throw std::invalid_argument("msve: shape mismatch");
  }
  const double wsum = weights.sum();
  if (wsum <= 0.0) throw std::invalid_argument("msve: non-positive weights");
  return weights.dot((q_hat - q_exact).cwiseAbs2()) / wsum;
}

double normalized_msve(const Vec& q_hat, const Vec& q_exact,
                       const Vec& q_random, const Vec& weights) {
  const double base = msve(q_random, q_exact, weights);
  const double raw = msve(q_hat, q_exact, weights);
  if (base == 0.0) {
    return raw == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return raw / base;
}

double bc_proxy_loss(const Mat& phi, const Mat& phi_next, const Vec& rewards,
                     double gamma) {
  if (phi.rows() != phi_next.rows() || phi.cols() != phi_next.cols() ||
      rewards.size() != phi.rows()) {
    throw std::invalid_argument("bc_proxy_loss: shape mismatch");
  }
  const Mat pinv = pseudo_inverse(phi);
  // Columns of the target: gamma-scaled next features and the reward.
  Mat target(phi.rows(), phi.cols() + 1);
  target.leftCols(phi.cols()) = gamma * phi_next;
  target.col(phi.cols()) = rewards;
  const Mat coeffs = pinv * target;
  return (phi * coeffs - target).squaredNorm();
}

DiagnosticsReport diagnose(const TabularMDP& mdp, const Policy& pi_e,
                           const Mat& phi_all, const Vec& q_exact_pi,
                           const Vec& q_random, const Vec& weights) {
  const LspeProblem prob = exact_problem(mdp, pi_e, phi_all);
  DiagnosticsReport rep;
  rep.spectral_radius =
      stability_spectral_radius(prob.phi, prob.phi_next, mdp.gamma);
  rep.is_stable = rep.spectral_radius < 1.0;
  rep.condition_number = condition_number(prob.phi, &rep.condition_infinite);
  rep.coadaptation = feature_coadaptation(prob.phi, prob.phi_next);
  rep.realizability_error = realizability_error(phi_all, q_exact_pi);
  rep.ortho_value_correlation = ortho_value_correlation(
      phi_all, q_exact_pi, &rep.correlation_degenerate, &rep.zero_norm_rows);
  const TdSolution sol = td_fixed_point(prob, mdp.gamma);
  rep.msve_normalized =
      normalized_msve(phi_all * sol.theta, q_exact_pi, q_random, weights);
  rep.bc_proxy_loss =
      bc_proxy_loss(prob.phi, prob.phi_next, prob.rewards, mdp.gamma);
  return rep;
}

}  // namespace krope
