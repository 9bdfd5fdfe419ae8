#include <doctest.h>

#include "krope/kernel.hpp"
#include "krope/mdp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <set>

using namespace krope;

namespace {

Mat random_psd(int n, Rng& rng, double scale = 1.0) {
  Mat a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  }
  return scale * (a * a.transpose()) / n;
}

struct GarnetKernel {
  TabularMDP mdp;
  Mat p_pi;
  KernelMatrix k1;
  KernelMatrix k;
};

GarnetKernel garnet_kernel(std::uint64_t seed, double gamma = 0.99) {
  GarnetKernel g;
  g.mdp = generate_garnet(8, 5, 3, seed, gamma);
  const Policy pi = uniform_policy(8, 5);
  g.p_pi = pi_transition_matrix(g.mdp, pi);
  g.k1 = k1_matrix(g.mdp.rewards, g.mdp.r_max, g.mdp.r_min);
  g.k = krope_fixed_point(g.k1.entries, g.p_pi, gamma, 1e-10);
  return g;
}

}  // namespace

TEST_CASE("k1_matrix: equal rewards give the all-ones matrix") {
  const Vec r = Vec::Constant(6, 0.3);
  const KernelMatrix k = k1_matrix(r, 1.0, -1.0);
  CHECK((k.entries - Mat::Ones(6, 6)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("k1_matrix: maximal reward gap zeroes the off-diagonal") {
  Vec r(2);
  r << -1.0, 1.0;
  const KernelMatrix k = k1_matrix(r, 1.0, -1.0);
  CHECK(k.entries(0, 0) == doctest::Approx(1.0));
  CHECK(k.entries(1, 1) == doctest::Approx(1.0));
  CHECK(k.entries(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("k1_matrix: PSD on random rewards") {
  Rng rng(2024);
  Vec r(40);
  for (int i = 0; i < 40; ++i) r[i] = rng.uniform(-1.0, 1.0);
  const KernelMatrix k = k1_matrix(r, 1.0, -1.0);
  CHECK(k.min_eigenvalue() >= -1e-10);
}

TEST_CASE("k1_matrix: positive definite for distinct interior rewards") {
  Rng rng(7);
  Vec r(12);
  std::set<double> seen;
  for (int i = 0; i < 12; ++i) {
    double v = rng.uniform(-0.9, 0.9);
    while (seen.count(v)) v = rng.uniform(-0.9, 0.9);
    seen.insert(v);
    r[i] = v;
  }
  const KernelMatrix k = k1_matrix(r, 1.0, -1.0);
  CHECK(k.min_eigenvalue() > 0.0);
}

TEST_CASE("k1_matrix: degenerate reward range rejected") {
  CHECK_THROWS(k1_matrix(Vec::Zero(3), 0.5, 0.5));
}

TEST_CASE("apply_krope_operator: base cases return K1") {
  const GarnetKernel g = garnet_kernel(1);
  const int n = g.mdp.num_sa();
  const Mat from_zero =
      apply_krope_operator(Mat::Zero(n, n), g.k1.entries, g.p_pi, 0.99);
  CHECK((from_zero - g.k1.entries).lpNorm<Eigen::Infinity>() < 1e-14);
  Rng rng(3);
  const Mat any = random_psd(n, rng);
  const Mat at_zero_gamma =
      apply_krope_operator(any, g.k1.entries, g.p_pi, 0.0);
  CHECK((at_zero_gamma - g.k1.entries).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("apply_krope_operator: contraction over 200 random PSD pairs") {
  const GarnetKernel g = garnet_kernel(2);
  const int n = g.mdp.num_sa();
  const double gamma = 0.99;
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Mat a = random_psd(n, rng, rng.uniform(0.1, 5.0));
    const Mat b = random_psd(n, rng, rng.uniform(0.1, 5.0));
    const Mat fa = apply_krope_operator(a, g.k1.entries, g.p_pi, gamma);
    const Mat fb = apply_krope_operator(b, g.k1.entries, g.p_pi, gamma);
    CHECK((fa - fb).lpNorm<Eigen::Infinity>() <=
          gamma * (a - b).lpNorm<Eigen::Infinity>() + 1e-12);
  }
}

TEST_CASE("krope_fixed_point: equal rewards saturate at 1/(1-gamma)") {
  const TabularMDP m = generate_garnet(5, 2, 2, 4, 0.9);
  const Mat p = pi_transition_matrix(m, uniform_policy(5, 2));
  const Mat k1 = Mat::Ones(m.num_sa(), m.num_sa());
  const KernelMatrix k = krope_fixed_point(k1, p, 0.9, 1e-12);
  CHECK((k.entries - Mat::Constant(m.num_sa(), m.num_sa(), 10.0))
            .lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("krope_fixed_point: gamma = 0 returns K1") {
  const GarnetKernel g = garnet_kernel(5);
  const KernelMatrix k = krope_fixed_point(g.k1.entries, g.p_pi, 0.0);
  CHECK((k.entries - g.k1.entries).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("krope_fixed_point matches the vectorized Kronecker solve") {
  const GarnetKernel g = garnet_kernel(6);
  const int n = g.mdp.num_sa();
  // vec(K) = vec(K1) + gamma (P (x) P) vec(K), solved directly in n^2 dims.
  Mat kron(n * n, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      kron.block(i * n, j * n, n, n) = g.p_pi(i, j) * g.p_pi;
    }
  }
  const Mat sys = Mat::Identity(n * n, n * n) - 0.99 * kron;
  Vec vec_k1(n * n);
  for (int i = 0; i < n; ++i) {
    vec_k1.segment(i * n, n) = g.k1.entries.row(i).transpose();
  }
  const Vec vec_k = sys.partialPivLu().solve(vec_k1);
  Mat k_direct(n, n);
  for (int i = 0; i < n; ++i) {
    k_direct.row(i) = vec_k.segment(i * n, n).transpose();
  }
  CHECK((g.k.entries - k_direct).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("krope_fixed_point: same limit from zero and saturated starts") {
  const GarnetKernel g = garnet_kernel(7);
  const int n = g.mdp.num_sa();
  const double tol = 1e-10;
  const Mat high = Mat::Constant(n, n, 1.0 / (1.0 - 0.99));
  const KernelMatrix from_high =
      krope_fixed_point(g.k1.entries, g.p_pi, 0.99, tol, -1, &high);
  CHECK((g.k.entries - from_high.entries).lpNorm<Eigen::Infinity>() <=
        2.0 * tol / (1.0 - 0.99));
}

TEST_CASE("krope_fixed_point: range and PSD of the limit") {
  const GarnetKernel g = garnet_kernel(8);
  CHECK(g.k.entries.minCoeff() >= 0.0);
  CHECK(g.k.entries.maxCoeff() <= 1.0 / (1.0 - 0.99) + 1e-9);
  CHECK(g.k.min_eigenvalue() >= -1e-8);
}

TEST_CASE("induced_distance: identity and all-ones kernels") {
  KernelMatrix id;
  id.entries = Mat::Identity(4, 4);
  const Mat d_id = induced_distance(id);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      CHECK(d_id(i, j) == doctest::Approx(i == j ? 0.0 : 2.0));
    }
  }
  KernelMatrix ones;
  ones.entries = Mat::Ones(4, 4);
  CHECK(induced_distance(ones).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("induced_distance decomposes into reward gap plus next-state MMD") {
  const GarnetKernel g = garnet_kernel(9);
  const Mat d = induced_distance(g.k);
  const int n = g.mdp.num_sa();
  const double range = g.mdp.r_max - g.mdp.r_min;
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      const double short_term =
          2.0 * std::abs(g.mdp.rewards[x] - g.mdp.rewards[y]) / range;
      const double mmd = mmd_squared(g.k, g.p_pi.row(x).transpose(),
                                     g.p_pi.row(y).transpose());
      CHECK(std::abs(d(x, y) - short_term - 0.99 * mmd) < 1e-8);
    }
  }
}

TEST_CASE("induced_distance square root satisfies the triangle inequality") {
  const GarnetKernel g = garnet_kernel(10);
  const Mat d = induced_distance(g.k);
  Rng rng(13);
  for (int t = 0; t < 500; ++t) {
    const int x = rng.uniform_int(g.mdp.num_sa());
    const int y = rng.uniform_int(g.mdp.num_sa());
    const int z = rng.uniform_int(g.mdp.num_sa());
    CHECK(std::sqrt(d(x, z)) <=
          std::sqrt(d(x, y)) + std::sqrt(d(y, z)) + 1e-8);
  }
}

TEST_CASE("mmd_squared: basics and validation") {
  KernelMatrix id;
  id.entries = Mat::Identity(5, 5);
  Vec p = Vec::Zero(5);
  p[1] = 1.0;
  Vec q = Vec::Zero(5);
  q[3] = 1.0;
  CHECK(mmd_squared(id, p, p) == doctest::Approx(0.0));
  CHECK(mmd_squared(id, p, q) == doctest::Approx(2.0));
  Vec bad = Vec::Constant(5, 0.1);
  CHECK_THROWS(mmd_squared(id, p, bad));
}

TEST_CASE("mmd_squared: full-rank kernel separates distinct distributions") {
  Rng rng(21);
  KernelMatrix k;
  k.entries = random_psd(6, rng) + 0.5 * Mat::Identity(6, 6);
  REQUIRE(k.min_eigenvalue() > 1e-3);
  for (int t = 0; t < 50; ++t) {
    Vec p(6), q(6);
    for (int i = 0; i < 6; ++i) {
      p[i] = rng.uniform(0.01, 1.0);
      q[i] = rng.uniform(0.01, 1.0);
    }
    p /= p.sum();
    q /= q.sum();
    const double m = mmd_squared(k, p, q);
    if ((p - q).lpNorm<Eigen::Infinity>() > 1e-8) {
      CHECK(m > 0.0);
    }
    // Zero MMD under a full-rank kernel forces p = q.
    if (m < 1e-14) {
      CHECK((p - q).lpNorm<Eigen::Infinity>() < 1e-8);
    }
  }
}

TEST_CASE("factorize_kernel: identity and all-ones kernels") {
  KernelMatrix id;
  id.entries = Mat::Identity(4, 4);
  const Mat phi_id = factorize_kernel(id);
  CHECK((phi_id * phi_id.transpose() - Mat::Identity(4, 4))
            .lpNorm<Eigen::Infinity>() < 1e-10);
  for (int i = 0; i < 4; ++i) {
    CHECK(phi_id.row(i).norm() == doctest::Approx(1.0));
  }

  KernelMatrix ones;
  ones.entries = Mat::Ones(4, 4);
  const Mat phi_ones = factorize_kernel(ones);
  REQUIRE(phi_ones.cols() == 1);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(phi_ones(i, 0)) == doctest::Approx(1.0));
  }
}

TEST_CASE("factorize_kernel reconstructs the Garnet fixed point") {
  const GarnetKernel g = garnet_kernel(12);
  const Mat phi = factorize_kernel(g.k);
  CHECK((phi * phi.transpose() - g.k.entries).lpNorm<Eigen::Infinity>() <
        1e-8);
}

TEST_CASE("bisim_partition: degenerate distance matrices") {
  const Mat zeros = Mat::Zero(5, 5);
  const Abstraction all_one = bisim_partition(zeros);
  CHECK(all_one.n_groups == 1);

  KernelMatrix id;
  id.entries = Mat::Identity(5, 5);
  const Abstraction singletons = bisim_partition(induced_distance(id));
  CHECK(singletons.n_groups == 5);
}

TEST_CASE("bisim_partition groups exactly duplicated state-actions") {
  // States 0 and 1 share reward and successor; state 2 differs.
  TabularMDP m;
  m.n_states = 3;
  m.n_actions = 1;
  m.rewards = Vec::Zero(3);
  m.rewards << 0.5, 0.5, -0.4;
  m.transitions = Mat::Zero(3, 3);
  m.transitions(0, 2) = 1.0;
  m.transitions(1, 2) = 1.0;
  m.transitions(2, 2) = 1.0;
  m.gamma = 0.9;
  m.d0 = Vec::Constant(3, 1.0 / 3.0);
  m.terminal = {false, false, false};
  const Mat p = pi_transition_matrix(m, uniform_policy(3, 1));
  const KernelMatrix k1 = k1_matrix(m.rewards, m.r_max, m.r_min);
  const KernelMatrix k = krope_fixed_point(k1.entries, p, m.gamma, 1e-12);
  const Abstraction abs = bisim_partition(induced_distance(k), 1e-8);
  CHECK(abs.labels[0] == abs.labels[1]);
  CHECK(abs.labels[0] != abs.labels[2]);
  CHECK(abs.n_groups == 2);
}

TEST_CASE("value_difference_bound: deterministic chain gives C = 0") {
  const TabularMDP m = generate_garnet(8, 1, 1, 15, 0.95);
  const Policy pi = uniform_policy(8, 1);
  const Mat p = pi_transition_matrix(m, pi);
  const KernelMatrix k1 = k1_matrix(m.rewards, m.r_max, m.r_min);
  const KernelMatrix k = krope_fixed_point(k1.entries, p, m.gamma, 1e-12);
  const ValueBound vb = value_difference_bound(m, pi, k, 50);
  CHECK(vb.bound.lpNorm<Eigen::Infinity>() < 1e-10);
  const Mat d = induced_distance(k);
  const Vec q = exact_q(m, pi);
  for (int x = 0; x < m.num_sa(); ++x) {
    for (int y = 0; y < m.num_sa(); ++y) {
      CHECK(std::abs(q[x] - q[y]) <= d(x, y) + 1e-8);
    }
  }
}

TEST_CASE("value_difference_bound: gamma = 0 reduces to the reward gap") {
  const TabularMDP m = generate_garnet(6, 2, 3, 19, 0.0);
  const Policy pi = uniform_policy(6, 2);
  const Mat p = pi_transition_matrix(m, pi);
  const KernelMatrix k1 = k1_matrix(m.rewards, m.r_max, m.r_min);
  const KernelMatrix k = krope_fixed_point(k1.entries, p, 0.0);
  const Mat d = induced_distance(k);
  const Vec q = exact_q(m, pi);
  for (int x = 0; x < m.num_sa(); ++x) {
    for (int y = 0; y < m.num_sa(); ++y) {
      CHECK(std::abs(q[x] - q[y]) <=
            std::abs(m.rewards[x] - m.rewards[y]) + 1e-12);
      CHECK(std::abs(q[x] - q[y]) <= d(x, y) + 1e-8);
    }
  }
}

TEST_CASE("value_difference_bound holds on a stochastic Garnet") {
  const TabularMDP m = generate_garnet(8, 5, 3, 27, 0.99);
  const Policy pi = uniform_policy(8, 5);
  const Mat p = pi_transition_matrix(m, pi);
  const KernelMatrix k1 = k1_matrix(m.rewards, m.r_max, m.r_min);
  const KernelMatrix k = krope_fixed_point(k1.entries, p, m.gamma, 1e-10);
  const ValueBound vb = value_difference_bound(m, pi, k, 2000);
  const Mat d = induced_distance(k);
  const Vec q = exact_q(m, pi);
  for (int x = 0; x < m.num_sa(); ++x) {
    for (int y = 0; y < m.num_sa(); ++y) {
      CHECK(std::abs(q[x] - q[y]) <= d(x, y) + vb.bound(x, y) + vb.tail + 1e-8);
    }
  }
}

TEST_CASE("kernel_on_dataset restricts to the dataset rows") {
  const GarnetKernel g = garnet_kernel(30);
  const OfflineDataset ds =
      sample_dataset(g.mdp, uniform_policy(8, 5), 20, 3);
  const Mat ke = kernel_on_dataset(g.k, ds, g.mdp.n_actions);
  REQUIRE(ke.rows() == 20);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const int xi = g.mdp.sa_index(ds.transitions[i].s, ds.transitions[i].a);
      const int xj = g.mdp.sa_index(ds.transitions[j].s, ds.transitions[j].a);
      CHECK(ke(i, j) == doctest::Approx(g.k.entries(xi, xj)));
    }
  }
}
