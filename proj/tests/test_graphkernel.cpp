#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "multiswitch/genbench.hpp"
#include "multiswitch/graphkernel.hpp"
#include "oracles.hpp"

using namespace multiswitch;
using Catch::Matchers::WithinAbs;

TEST_CASE("ceiling log2", "[graphkernel]") {
  CHECK(ceil_log2(1) == 0);
  CHECK(ceil_log2(2) == 1);
  CHECK(ceil_log2(3) == 2);
  CHECK(ceil_log2(4) == 2);
  CHECK(ceil_log2(5) == 3);
  CHECK(ceil_log2(1024) == 10);
  CHECK(ceil_log2(1025) == 11);
  CHECK_THROWS_AS(ceil_log2(0), std::invalid_argument);
}

TEST_CASE("tree sizes follow the horizon", "[graphkernel]") {
  CHECK(PathTreeKernel(2).vertex_count() == 3);
  CHECK(PathTreeKernel(2).depth() == 1);
  CHECK(PathTreeKernel(5).vertex_count() == 15);
  CHECK(PathTreeKernel(5).depth() == 3);
  CHECK(tree_vertex_count(2) == 7);
  CHECK(first_leaf(2) == 3);
}

TEST_CASE("tree laplacian is a laplacian", "[graphkernel]") {
  const Eigen::MatrixXd L1 = build_tree_laplacian(1);
  Eigen::MatrixXd expect(3, 3);
  expect << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  CHECK((L1 - expect).cwiseAbs().maxCoeff() == 0.0);

  for (int depth = 1; depth <= 5; ++depth) {
    const Eigen::MatrixXd L = build_tree_laplacian(depth);
    CHECK((L - L.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((L * Eigen::VectorXd::Ones(L.rows())).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < L.rows(); ++i)
      for (int j = 0; j < L.cols(); ++j)
        if (i != j) CHECK((L(i, j) == 0.0 || L(i, j) == -1.0));
  }
}

TEST_CASE("ancestor-climbing distance equals breadth-first search", "[graphkernel]") {
  for (int depth = 1; depth <= 5; ++depth) {
    const Eigen::MatrixXi D = oracles::bfs_tree_distances(depth);
    for (int i = 0; i < D.rows(); ++i)
      for (int j = 0; j < D.cols(); ++j) CHECK(tree_distance(i, j) == D(i, j));
  }
}

TEST_CASE("laplacian pseudoinverse satisfies the Penrose identities", "[graphkernel]") {
  for (int depth = 1; depth <= 4; ++depth) {
    const Eigen::MatrixXd L = build_tree_laplacian(depth);
    const Eigen::MatrixXd Lp = laplacian_pinv(L);
    CHECK((L * Lp * L - L).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((Lp * L * Lp - Lp).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((Lp - Lp.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((Lp * Eigen::VectorXd::Ones(L.rows())).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK_THROWS_AS(laplacian_pinv(Eigen::MatrixXd::Zero(3, 3)), std::runtime_error);
}

TEST_CASE("three-vertex pseudoinverse diagonal frozen values", "[graphkernel]") {
  const Eigen::MatrixXd Lp = laplacian_pinv(build_tree_laplacian(1));
  CHECK_THAT(Lp(0, 0), WithinAbs(2.0 / 9.0, 1e-12));
  CHECK_THAT(Lp(1, 1), WithinAbs(5.0 / 9.0, 1e-12));
  CHECK_THAT(Lp(2, 2), WithinAbs(5.0 / 9.0, 1e-12));
}

TEST_CASE("effective resistance on a tree is path length", "[graphkernel]") {
  for (int depth = 2; depth <= 4; ++depth) {
    const Eigen::MatrixXd Lp = laplacian_pinv(build_tree_laplacian(depth));
    const Eigen::MatrixXi D = oracles::bfs_tree_distances(depth);
    for (int i = 0; i < D.rows(); ++i)
      for (int j = 0; j < D.cols(); ++j)
        CHECK_THAT(effective_resistance(Lp, i, j), WithinAbs(double(D(i, j)), 1e-9));
  }
  // Frozen cases on the depth-2 tree: sibling leaves and cross-subtree leaves.
  const Eigen::MatrixXd Lp2 = laplacian_pinv(build_tree_laplacian(2));
  CHECK_THAT(effective_resistance(Lp2, 3, 4), WithinAbs(2.0, 1e-9));
  CHECK_THAT(effective_resistance(Lp2, 3, 6), WithinAbs(4.0, 1e-9));
  CHECK_THAT(effective_resistance(Lp2, 0, 1), WithinAbs(1.0, 1e-9));
}

TEST_CASE("closed-form max pseudoinverse diagonal matches the eigensolver", "[graphkernel]") {
  for (int depth = 1; depth <= 5; ++depth) {
    const Eigen::MatrixXd Lp = laplacian_pinv(build_tree_laplacian(depth));
    CHECK_THAT(tree_max_pinv_diag(depth), WithinAbs(Lp.diagonal().maxCoeff(), 1e-9));
    // Also at most half the diameter.
    CHECK(tree_max_pinv_diag(depth) <= depth + 1e-12);
  }
  CHECK_THAT(tree_max_pinv_diag(1), WithinAbs(5.0 / 9.0, 1e-12));
}

TEST_CASE("two-point kernel frozen values and direct inversion", "[graphkernel]") {
  const PathTreeKernel P(2);
  CHECK_THAT(P(1, 1), WithinAbs(10.0 / 9.0, 1e-9));
  CHECK_THAT(P(2, 2), WithinAbs(10.0 / 9.0, 1e-9));
  CHECK_THAT(P(1, 2), WithinAbs(1.0 / 9.0, 1e-9));

  // Direct check: ground the 3-vertex laplacian with 1/(N^2 R_L) = 1/5 on
  // every entry and invert by the adjugate formula.
  Eigen::Matrix3d Lg;
  Lg << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  Lg.array() += 1.0 / 5.0;
  const Eigen::Matrix3d G = oracles::inverse3_adjugate(Lg);
  CHECK_THAT(P(1, 1), WithinAbs(G(1, 1), 1e-9));
  CHECK_THAT(P(1, 2), WithinAbs(G(1, 2), 1e-9));
  CHECK_THAT(P(2, 2), WithinAbs(G(2, 2), 1e-9));

  // The grounded matrix has eigenvalues 3/5, 1, 3.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Lg);
  CHECK_THAT(eig.eigenvalues()(0), WithinAbs(0.6, 1e-9));
  CHECK_THAT(eig.eigenvalues()(1), WithinAbs(1.0, 1e-9));
  CHECK_THAT(eig.eigenvalues()(2), WithinAbs(3.0, 1e-9));
}

TEST_CASE("single time point gets the unit kernel", "[graphkernel]") {
  const PathTreeKernel P(1);
  CHECK(P.gram().rows() == 1);
  CHECK_THAT(P(1, 1), WithinAbs(1.0, 0.0));
}

TEST_CASE("kernel grams are positive definite with bounded diagonal", "[graphkernel]") {
  for (int T : {2, 3, 5, 8, 13, 32}) {
    const PathTreeKernel P(T);
    const Eigen::MatrixXd& G = P.gram();
    CHECK((G - G.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    CHECK(eig.eigenvalues()(0) > 0.0);
    CHECK(P.max_diag() <= 2.0 * ceil_log2(T) + 1e-9);
  }
}

TEST_CASE("binary sequences with few switches have small interpolation norm", "[graphkernel]") {
  std::mt19937_64 rng(77);
  for (int T : {2, 4, 8, 16}) {
    const PathTreeKernel P(T);
    const double r = ceil_log2(T);
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::VectorXd f(T);
      int switches = 0;
      for (int t = 0; t < T; ++t) f(t) = static_cast<double>(rng() % 2);
      for (int t = 0; t + 1 < T; ++t) switches += f(t) != f(t + 1) ? 1 : 0;
      const double norm_sq = rkhs_norm_sq(P.gram(), f);
      CHECK(norm_sq * P.max_diag() <= switches * r * r + 2.0 + 1e-9);
    }
    // Constant sequences are the cheapest: norm^2 * maxdiag <= 2.
    CHECK(rkhs_norm_sq(P.gram(), Eigen::VectorXd::Ones(T)) * P.max_diag() <= 2.0 + 1e-9);
  }
}

TEST_CASE("multitask kernel reduces to the base kernel for one task", "[graphkernel]") {
  const TaskSchedule sched({1, 1, 1, 1, 1}, 1);
  const MultitaskPathTreeKernel MK(sched);
  const PathTreeKernel P(5);
  CHECK((MK.gram() - P.gram()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("multitask kernel lays tasks out as contiguous leaf blocks", "[graphkernel]") {
  const TaskSchedule sched({1, 2, 1, 2}, 2);  // lengths 2, 2
  const MultitaskPathTreeKernel MK(sched);
  const PathTreeKernel& P = MK.base();
  // Trials 1,3 are task 1 times 1,2 -> positions 1,2; trials 2,4 -> 3,4.
  CHECK(MK.time_position(1) == 1);
  CHECK(MK.time_position(2) == 3);
  CHECK(MK.time_position(3) == 2);
  CHECK(MK.time_position(4) == 4);
  CHECK_THAT(MK(1, 3), WithinAbs(P(1, 2), 1e-15));
  CHECK_THAT(MK(2, 4), WithinAbs(P(3, 4), 1e-15));
  CHECK_THAT(MK(1, 2), WithinAbs(P(1, 3), 1e-15));
}

TEST_CASE("multitask positions are a bijection and the gram a permutation", "[graphkernel]") {
  std::mt19937_64 rng(88);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<int> lengths = {1 + int(rng() % 5), 1 + int(rng() % 5), 1 + int(rng() % 5)};
    const TaskSchedule sched = gen_schedule(lengths, rng());
    const MultitaskPathTreeKernel MK(sched);
    const int T = sched.T();
    std::vector<bool> seen(T + 1, false);
    for (int tau = 1; tau <= T; ++tau) {
      const int pos = MK.time_position(tau);
      REQUIRE(pos >= 1);
      REQUIRE(pos <= T);
      CHECK_FALSE(seen[pos]);
      seen[pos] = true;
    }
    const Eigen::MatrixXd G = MK.gram();
    for (int a = 1; a <= T; ++a)
      for (int b = 1; b <= T; ++b)
        CHECK_THAT(G(a - 1, b - 1), WithinAbs(MK.base()(MK.time_position(a), MK.time_position(b)), 1e-15));
    CHECK(MK.max_diag() <= 2.0 * ceil_log2(T) + 1e-9);
  }
}

TEST_CASE("interpolation norms under simple grams", "[graphkernel]") {
  Eigen::VectorXd f(4);
  f << 1, -1, 1, 1;
  CHECK_THAT(rkhs_norm_sq(Eigen::MatrixXd::Identity(4, 4), f), WithinAbs(4.0, 1e-12));
  CHECK_THAT(rkhs_norm_sq(2.0 * Eigen::MatrixXd::Identity(4, 4), f), WithinAbs(2.0, 1e-12));
  CHECK_THROWS_AS(rkhs_norm_sq(Eigen::MatrixXd::Zero(4, 4), f), std::runtime_error);
  CHECK_THROWS_AS(rkhs_norm_sq(Eigen::MatrixXd::Identity(3, 3), f), std::invalid_argument);
}

TEST_CASE("instance kernels", "[graphkernel]") {
  const GaussianKernel g(2.0);
  Eigen::VectorXd a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  CHECK_THAT(g(a, a), WithinAbs(1.0, 1e-15));
  CHECK_THAT(g(a, b), WithinAbs(std::exp(-2.0 / 8.0), 1e-12));
  CHECK_THROWS_AS(GaussianKernel(0.0), std::invalid_argument);

  const DeltaKernel d;
  CHECK(d(3, 3) == 1.0);
  CHECK(d(3, 4) == 0.0);
  // Any +-1 labeling of distinct keys has squared norm equal to its length.
  Eigen::MatrixXd gram(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) gram(i, j) = d(i, j);
  Eigen::VectorXd f(5);
  f << 1, -1, -1, 1, -1;
  CHECK_THAT(rkhs_norm_sq(gram, f), WithinAbs(5.0, 1e-12));
}
