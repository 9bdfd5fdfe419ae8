#include "krope/kernel.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace krope {

void KernelMatrix::validate() const {
  if (entries.rows() != entries.cols()) {
    throw std::invalid_argument("KernelMatrix: not square");
  }
  const double asym =
      (entries - entries.transpose()).lpNorm<Eigen::Infinity>();
  if (asym > 1e-12) {
    throw std::invalid_argument("KernelMatrix: asymmetric beyond 1e-12");
  }
  if (min_eigenvalue() < -psd_tolerance) {
    throw std::invalid_argument("KernelMatrix: not positive semidefinite");
  }
}

double KernelMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(entries,
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

KernelMatrix k1_matrix(const Vec& rewards, double r_max, double r_min) {
  if (!(r_max > r_min)) {
    throw std::invalid_argument("k1_matrix: degenerate reward range");
  }
  if (rewards.minCoeff() < r_min - 1e-12 ||
      rewards.maxCoeff() > r_max + 1e-12) {
    throw std::invalid_argument("k1_matrix: reward outside bounds");
  }
  const int n = static_cast<int>(rewards.size());
  const double range = std::abs(r_max - r_min);
  KernelMatrix k;
  k.entries.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = 1.0 - std::abs(rewards[i] - rewards[j]) / range;
      k.entries(i, j) = v;
      k.entries(j, i) = v;
    }
  }
  return k;
}

Mat apply_krope_operator(const Mat& k, const Mat& k1, const Mat& p_pi,
                         double gamma) {
  const auto n = k1.rows();
  if (k.rows() != n || k.cols() != n || k1.cols() != n || p_pi.rows() != n ||
      p_pi.cols() != n) {
    throw std::invalid_argument("apply_krope_operator: shape mismatch");
  }
  return k1 + gamma * p_pi * k * p_pi.transpose();
}

KernelMatrix krope_fixed_point(const Mat& k1, const Mat& p_pi, double gamma,
                               double tol, int max_iters, const Mat* start) {
  if (gamma >= 1.0) {
    throw std::invalid_argument("krope_fixed_point: gamma must be < 1");
  }
  if (max_iters < 0) {
    max_iters = gamma == 0.0
                    ? 2
                    : static_cast<int>(
                          std::ceil(std::log(tol * (1.0 - gamma)) /
                                    std::log(gamma))) +
                          2;
  }
  Mat k = start != nullptr ? *start : Mat::Zero(k1.rows(), k1.cols());
  for (int it = 0; it < max_iters; ++it) {
    Mat next = apply_krope_operator(k, k1, p_pi, gamma);
    const double delta = (next - k).lpNorm<Eigen::Infinity>();
    k = std::move(next);
    if (delta <= tol) {
      KernelMatrix out;
      out.entries = std::move(k);
      return out;
    }
  }
  throw std::runtime_error("krope_fixed_point: did not converge");
}

Mat induced_distance(const KernelMatrix& k) {
  k.validate();
  const Mat& e = k.entries;
  const int n = static_cast<int>(e.rows());
  Mat d(n, n);
  for (int i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (int j = 0; j < i; ++j) {
      double v = e(i, i) + e(j, j) - 2.0 * e(i, j);
      if (v < -1e-10) {
        throw std::runtime_error("induced_distance: negative beyond clamp");
      }
      v = std::max(v, 0.0);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

double mmd_squared(const KernelMatrix& k, const Vec& p, const Vec& q) {
  if (p.size() != k.entries.rows() || q.size() != k.entries.rows()) {
    throw std::invalid_argument("mmd_squared: shape mismatch");
  }
  for (const Vec* v : {&p, &q}) {
    if (std::abs(v->sum() - 1.0) > 1e-9 || v->minCoeff() < -1e-12) {
      throw std::invalid_argument("mmd_squared: not a distribution");
    }
  }
  const Vec diff = p - q;
  const double v = diff.dot(k.entries * diff);
  if (v < -1e-12) {
    throw std::runtime_error("mmd_squared: negative beyond tolerance");
  }
  return std::max(v, 0.0);
}

Mat factorize_kernel(const KernelMatrix& k, double rank_tol, int max_rank) {
  k.validate();
  Eigen::SelfAdjointEigenSolver<Mat> es(k.entries);
  const Vec& evals = es.eigenvalues();  // ascending
  const Mat& evecs = es.eigenvectors();
  const int n = static_cast<int>(evals.size());
  const double lambda_max = std::max(evals[n - 1], 0.0);

  std::vector<int> keep;  // descending eigenvalue order
  for (int i = n - 1; i >= 0; --i) {
    if (evals[i] > rank_tol * lambda_max && evals[i] > 0.0) keep.push_back(i);
  }
  if (max_rank >= 1 && static_cast<int>(keep.size()) > max_rank) {
    keep.resize(max_rank);
  }
  const int d = std::max<int>(1, static_cast<int>(keep.size()));
  Mat phi = Mat::Zero(n, d);
  for (std::size_t c = 0; c < keep.size(); ++c) {
    phi.col(static_cast<int>(c)) =
        evecs.col(keep[c]) * std::sqrt(evals[keep[c]]);
  }
  return phi;
}

Abstraction bisim_partition(const Mat& d, double tol) {
  const int n = static_cast<int>(d.rows());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (d(i, j) <= tol) {
        const int ri = find(i), rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
    }
  }
  Abstraction out;
  out.tolerance = tol;
  out.labels.resize(n);
  std::vector<int> relabel(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (relabel[r] < 0) relabel[r] = next++;
    out.labels[i] = relabel[r];
  }
  out.n_groups = next;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (out.labels[i] == out.labels[j]) {
        out.max_within_group_distance =
            std::max(out.max_within_group_distance, d(i, j));
      }
    }
  }
  return out;
}

ValueBound value_difference_bound(const TabularMDP& mdp, const Policy& pi,
                                  const KernelMatrix& k, int truncation_n) {
  const Mat p = pi_transition_matrix(mdp, pi);
  const int nx = mdp.num_sa();

  // delta(x') = sum_{u,v} P(u|x') P(v|x') |r(u) - r(v)|
  Mat r_abs(nx, nx);
  for (int u = 0; u < nx; ++u) {
    for (int v = 0; v < nx; ++v) {
      r_abs(u, v) = std::abs(mdp.rewards[u] - mdp.rewards[v]);
    }
  }
  const Mat prp = p * r_abs * p.transpose();
  const Vec delta = prp.diagonal();

  Vec c_half = Vec::Zero(nx);  // sum_n gamma^n Delta_n(x), Delta_n = P^n delta
  Vec pn_delta = delta;
  double gpow = 1.0;
  for (int n = 0; n <= truncation_n; ++n) {
    c_half += gpow * pn_delta;
    if (n < truncation_n) {
      pn_delta = p * pn_delta;
      gpow *= mdp.gamma;
    }
  }
  gpow *= mdp.gamma;

  ValueBound out;
  out.bound.resize(nx, nx);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < nx; ++j) {
      out.bound(i, j) = 0.5 * (c_half[i] + c_half[j]);
    }
  }
  out.tail = mdp.gamma < 1.0 ? gpow * 2.0 / (1.0 - mdp.gamma)
                             : std::numeric_limits<double>::infinity();
  return out;
}

Mat kernel_on_dataset(const KernelMatrix& k, const OfflineDataset& ds,
                      int n_actions) {
  const int m = ds.size();
  Mat out(m, m);
  for (int i = 0; i < m; ++i) {
    const int xi = ds.transitions[i].s * n_actions + ds.transitions[i].a;
    for (int j = 0; j < m; ++j) {
      const int xj = ds.transitions[j].s * n_actions + ds.transitions[j].a;
      out(i, j) = k.entries(xi, xj);
    }
  }
  return out;
}

}  // namespace krope
