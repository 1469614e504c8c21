#pragma once

// Kernels over time built from complete binary trees: the tree Laplacian, its
// pseudoinverse and effective resistances, the grounded inverse restricted to
// leaves ("path-tree kernel"), its multitask extension over a schedule, and
// the instance-space kernels paired with it.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "multiswitch/core.hpp"

namespace multiswitch {

// Smallest d >= 0 with 2^d >= T.
inline int ceil_log2(int T) {
  if (T < 1) throw std::invalid_argument("ceil_log2: T must be >= 1");
  int d = 0;
  while ((1 << d) < T) ++d;
  return d;
}

// ---------------------------------------------------------------------------
// Complete binary tree of the given depth in heap numbering: root 0, children
// of v are 2v+1 and 2v+2, leaves are the last 2^depth vertices.
// ---------------------------------------------------------------------------
inline int tree_vertex_count(int depth) {
  if (depth < 0 || depth > 29) throw std::invalid_argument("tree_vertex_count: bad depth");
  return (1 << (depth + 1)) - 1;
}

inline int first_leaf(int depth) { return (1 << depth) - 1; }

inline Eigen::MatrixXd build_tree_laplacian(int depth) {
  const int N = tree_vertex_count(depth);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N, N);
  for (int v = 0; v < first_leaf(depth); ++v) {
    for (int c : {2 * v + 1, 2 * v + 2}) {
      L(v, v) += 1.0;
      L(c, c) += 1.0;
      L(v, c) -= 1.0;
      L(c, v) -= 1.0;
    }
  }
  return L;
}

// Unweighted tree distance between heap vertices: climb to the common
// ancestor. On a tree this equals the effective resistance between them.
inline int tree_distance(int a, int b) {
  if (a < 0 || b < 0) throw std::invalid_argument("tree_distance: negative vertex");
  int d = 0;
  while (a != b) {
    if (a > b) { a = (a - 1) / 2; } else { b = (b - 1) / 2; }
    ++d;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Laplacian pseudoinverse via symmetric eigendecomposition. Requires a
// connected graph (exactly one vanishing eigenvalue).
// ---------------------------------------------------------------------------
inline Eigen::MatrixXd laplacian_pinv(const Eigen::MatrixXd& L) {
  if (L.rows() != L.cols()) throw std::invalid_argument("laplacian_pinv: matrix not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(L);
  if (eig.info() != Eigen::Success) throw std::runtime_error("laplacian_pinv: eigensolver failed");
  const Eigen::VectorXd& lam = eig.eigenvalues();
  const double tol = 1e-9 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  int zeros = 0;
  Eigen::VectorXd inv(lam.size());
  for (int i = 0; i < lam.size(); ++i) {
    if (std::abs(lam(i)) <= tol) {
      inv(i) = 0.0;
      ++zeros;
    } else if (lam(i) < 0.0) {
      throw std::runtime_error("laplacian_pinv: matrix is not a Laplacian (negative eigenvalue)");
    } else {
      inv(i) = 1.0 / lam(i);
    }
  }
  if (zeros != 1) throw std::runtime_error("laplacian_pinv: graph is not connected");
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

inline double effective_resistance(const Eigen::MatrixXd& Lpinv, int i, int j) {
  if (i < 0 || j < 0 || i >= Lpinv.rows() || j >= Lpinv.cols())
    throw std::out_of_range("effective_resistance: vertex out of range");
  return Lpinv(i, i) + Lpinv(j, j) - 2.0 * Lpinv(i, j);
}

// Largest diagonal entry of the pseudoinverse computed without any
// decomposition, from tree distances alone:
//   Lpinv(i,i) = R(i)/N - R_tot/N^2,  R(i) = sum_j dist(i,j),
//   R_tot = sum over unordered pairs of dist.
inline double tree_max_pinv_diag(int depth) {
  const int N = tree_vertex_count(depth);
  std::vector<double> R(N, 0.0);
  double R_tot = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      const double d = tree_distance(i, j);
      R[i] += d;
      R[j] += d;
      R_tot += d;
    }
  double best = 0.0;
  for (int i = 0; i < N; ++i) best = std::max(best, R[i] / N - R_tot / (N * double(N)));
  return best;
}

// ---------------------------------------------------------------------------
// Path-tree kernel over T time points: take the complete binary tree of depth
// ceil(log2 T), ground its Laplacian with the rank-one term (1/N^2 R_L) J
// where R_L = max_i Lpinv(i,i), invert, and keep the block of the first T
// leaves. The result is symmetric positive definite with diagonal at most
// 2*ceil(log2 T), and binary sequences with few switches have small norm.
// ---------------------------------------------------------------------------
class PathTreeKernel {
 public:
  explicit PathTreeKernel(int T) : T_(T) {
    if (T < 1) throw std::invalid_argument("PathTreeKernel: T must be >= 1");
    depth_ = ceil_log2(T);
    N_ = tree_vertex_count(depth_);
    if (T_ == 1) {
      // Single vertex: the grounding term is all there is; use the unit kernel.
      R_L_ = 0.0;
      P_ = Eigen::MatrixXd::Ones(1, 1);
      return;
    }
    R_L_ = tree_max_pinv_diag(depth_);
    Eigen::MatrixXd Lg = build_tree_laplacian(depth_);
    Lg.array() += 1.0 / (double(N_) * N_ * R_L_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Lg);
    if (eig.info() != Eigen::Success) throw std::runtime_error("PathTreeKernel: eigensolver failed");
    if (eig.eigenvalues()(0) <= 0.0)
      throw std::runtime_error("PathTreeKernel: grounded Laplacian not positive definite");
    const Eigen::MatrixXd G = eig.eigenvectors() *
                              eig.eigenvalues().cwiseInverse().asDiagonal() *
                              eig.eigenvectors().transpose();
    const int lo = first_leaf(depth_);
    P_ = G.block(lo, lo, T_, T_);
  }

  int T() const { return T_; }
  int depth() const { return depth_; }
  int vertex_count() const { return N_; }
  double laplacian_max_pinv_diag() const { return R_L_; }
  const Eigen::MatrixXd& gram() const { return P_; }
  double max_diag() const { return P_.diagonal().maxCoeff(); }

  // 1-based time indices.
  double operator()(int t, int u) const {
    if (t < 1 || u < 1 || t > T_ || u > T_) throw std::out_of_range("PathTreeKernel: index out of range");
    return P_(t - 1, u - 1);
  }

 private:
  int T_, depth_, N_;
  double R_L_;
  Eigen::MatrixXd P_;
};

// ---------------------------------------------------------------------------
// Multitask extension: global trial tau of task l with local time t maps to
// leaf position block_offset(l) + t of the single-task kernel over all
// sum(T^i) time points, so each task occupies a contiguous run of leaves.
// ---------------------------------------------------------------------------
class MultitaskPathTreeKernel {
 public:
  explicit MultitaskPathTreeKernel(const TaskSchedule& schedule)
      : schedule_(schedule), base_(schedule.T()) {
    pos_.resize(schedule.T());
    for (int tau = 1; tau <= schedule.T(); ++tau) {
      auto [task, local] = schedule.route(tau);
      pos_[tau - 1] = schedule.block_offset(task) + local;  // 1-based time point
    }
  }

  const TaskSchedule& schedule() const { return schedule_; }
  const PathTreeKernel& base() const { return base_; }
  int time_position(int tau) const { return pos_.at(tau - 1); }

  // 1-based global trial indices.
  double operator()(int tau, int ups) const {
    return base_(pos_.at(tau - 1), pos_.at(ups - 1));
  }

  Eigen::MatrixXd gram() const {
    const int T = schedule_.T();
    Eigen::MatrixXd G(T, T);
    for (int a = 0; a < T; ++a)
      for (int b = 0; b < T; ++b) G(a, b) = base_(pos_[a], pos_[b]);
    return G;
  }

  double max_diag() const {
    double best = 0.0;
    for (int p : pos_) best = std::max(best, base_(p, p));
    return best;
  }

 private:
  TaskSchedule schedule_;
  PathTreeKernel base_;
  std::vector<int> pos_;  // trial -> time point, 1-based
};

// ---------------------------------------------------------------------------
// Interpolation norm: f' G^{-1} f for a symmetric positive definite gram.
// ---------------------------------------------------------------------------
inline double rkhs_norm_sq(const Eigen::MatrixXd& gram, const Eigen::VectorXd& f) {
  if (gram.rows() != gram.cols() || gram.rows() != f.size())
    throw std::invalid_argument("rkhs_norm_sq: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("rkhs_norm_sq: gram matrix is not positive definite");
  return f.dot(llt.solve(f));
}

// ---------------------------------------------------------------------------
// Instance-space kernels.
// ---------------------------------------------------------------------------
struct GaussianKernel {
  double width = 1.0;
  explicit GaussianKernel(double w) : width(w) {
    if (!(w > 0.0)) throw std::invalid_argument("GaussianKernel: width must be > 0");
  }
  double operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return std::exp(-(a - b).squaredNorm() / (2.0 * width * width));
  }
};

// Orthonormal-key kernel: distinct keys are orthogonal unit vectors, so any
// +-1 labeling of d distinct keys interpolates with squared norm exactly d.
struct DeltaKernel {
  double operator()(int a, int b) const { return a == b ? 1.0 : 0.0; }
};

}  // namespace multiswitch
