#pragma once

// Matrix multiplicative weights over joint (instance x time) embeddings: each
// trial is embedded as a rank-one density-like matrix built from square roots
// of the instance gram and the multitask path-tree gram, the weight matrix is
// the exponential of the accumulated margin-error updates, and predictions
// are randomized signs of its trace against the current embedding.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "multiswitch/core.hpp"
#include "multiswitch/graphkernel.hpp"

namespace multiswitch {

// exp(S) for symmetric S via eigendecomposition.
inline Eigen::MatrixXd matrix_exp_sym(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols()) throw std::invalid_argument("matrix_exp_sym: matrix not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.info() != Eigen::Success) throw std::runtime_error("matrix_exp_sym: eigensolver failed");
  return eig.eigenvectors() * eig.eigenvalues().array().exp().matrix().asDiagonal() *
         eig.eigenvectors().transpose();
}

// Symmetric PSD square root with eigenvalues floored at 1e-12 so grams that
// are PSD up to float error still factor.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols()) throw std::invalid_argument("psd_sqrt: matrix not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.info() != Eigen::Success) throw std::runtime_error("psd_sqrt: eigensolver failed");
  Eigen::VectorXd lam = eig.eigenvalues();
  for (int i = 0; i < lam.size(); ++i) {
    if (lam(i) < -1e-6) throw std::runtime_error("psd_sqrt: matrix is not positive semidefinite");
    lam(i) = std::sqrt(std::max(lam(i), 1e-12));
  }
  return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

// ---------------------------------------------------------------------------
// Tuning. c_hat estimates the comparator complexity; xk2_hat upper-bounds the
// instance kernel diagonal; the time half always uses 2*ceil(log2 T), which
// upper-bounds the multitask path-tree diagonal.
// ---------------------------------------------------------------------------
struct MatMWConfig {
  int T = 0;
  int m = 0;            // estimated number of latent modes
  double c_hat = 0.0;   // complexity estimate driving the learning rate
  double xk2_hat = 0.0; // bound on instance kernel diagonal
  double xp2_hat = 0.0; // bound on time kernel diagonal
  double eta = 0.0;
  double gamma = 0.0;   // randomization width and margin threshold
};

inline double matmw_tuned_eta(double c_hat, int m, int T) {
  if (!(c_hat > 0.0) || m < 1 || T < 1) throw std::invalid_argument("matmw_tuned_eta: bad inputs");
  return std::sqrt(c_hat * std::log(2.0 * T) / (2.0 * T * m));
}

inline double matmw_regret_bound(double c_hat, int T) {
  if (!(c_hat > 0.0) || T < 1) throw std::invalid_argument("matmw_regret_bound: bad inputs");
  return 4.0 * std::sqrt(2.0 * c_hat * T * std::log(2.0 * T));
}

inline MatMWConfig matmw_tuned(int T, int m, double c_hat, double xk2_hat) {
  if (T < 2) throw std::invalid_argument("matmw_tuned: need T >= 2");
  if (m < 1) throw std::invalid_argument("matmw_tuned: m must be >= 1");
  if (!(c_hat > 0.0)) throw std::invalid_argument("matmw_tuned: c_hat must be > 0");
  if (!(xk2_hat > 0.0)) throw std::invalid_argument("matmw_tuned: xk2_hat must be > 0");
  MatMWConfig c;
  c.T = T;
  c.m = m;
  c.c_hat = c_hat;
  c.xk2_hat = xk2_hat;
  c.xp2_hat = 2.0 * ceil_log2(T);
  c.eta = matmw_tuned_eta(c_hat, m, T);
  c.gamma = 1.0 / std::sqrt(static_cast<double>(m));
  return c;
}

// Complexity of a comparator with the given per-mode interpolation norms,
// instance-diagonal bound, and switching profile:
//   C = sum_h ||h||^2 X^2 + 2(s+k-1) m ceil(log2 T)^2 + 2 m^2.
inline double comparator_complexity(const std::vector<double>& mode_norms_sq, double xk2, int s,
                                    int k, int m, int T) {
  if (mode_norms_sq.empty()) throw std::invalid_argument("comparator_complexity: no modes");
  if (!(xk2 > 0.0) || s < 1 || k < 0 || m < 1 || T < 1)
    throw std::invalid_argument("comparator_complexity: bad inputs");
  double norms = 0.0;
  for (double v : mode_norms_sq) {
    if (v < 0.0) throw std::invalid_argument("comparator_complexity: negative norm");
    norms += v;
  }
  const double r = ceil_log2(T);
  return norms * xk2 + 2.0 * (s + k - 1.0) * m * r * r + 2.0 * m * m;
}

// ---------------------------------------------------------------------------
// Quasi-dimension of a factorized comparator U = U* C' given grams over the
// row objects (instances) and column objects (trials):
//   D = gamma^2 tr(U*' Kinv U*) max_i K(i,i) + tr(C' Pinv C) max_t P(t,t).
// ---------------------------------------------------------------------------
inline double quasi_dimension_star(const Eigen::MatrixXd& U_star, const Eigen::MatrixXd& C,
                                   const Eigen::MatrixXd& K_gram, const Eigen::MatrixXd& P_gram,
                                   double gamma) {
  if (K_gram.rows() != K_gram.cols() || K_gram.rows() != U_star.rows())
    throw std::invalid_argument("quasi_dimension_star: instance gram / U* mismatch");
  if (P_gram.rows() != P_gram.cols() || P_gram.rows() != C.rows())
    throw std::invalid_argument("quasi_dimension_star: time gram / C mismatch");
  if (U_star.cols() != C.cols())
    throw std::invalid_argument("quasi_dimension_star: U* and C mode counts differ");
  if (!(gamma > 0.0)) throw std::invalid_argument("quasi_dimension_star: gamma must be > 0");

  Eigen::LLT<Eigen::MatrixXd> lltK(K_gram);
  if (lltK.info() != Eigen::Success)
    throw std::runtime_error("quasi_dimension_star: instance gram not positive definite");
  Eigen::LLT<Eigen::MatrixXd> lltP(P_gram);
  if (lltP.info() != Eigen::Success)
    throw std::runtime_error("quasi_dimension_star: time gram not positive definite");

  const double trU = (U_star.array() * lltK.solve(U_star).array()).sum();
  const double trC = (C.array() * lltP.solve(C).array()).sum();
  return gamma * gamma * trU * K_gram.diagonal().maxCoeff() + trC * P_gram.diagonal().maxCoeff();
}

// ---------------------------------------------------------------------------
// The learner. Instances are opaque integer keys scored through a
// user-supplied kernel; trials are scored through the multitask path-tree
// kernel of the schedule. State grows only on margin errors: the sets of
// stored instance keys and stored trials, plus the signed updates over them.
// The weight matrix is rebuilt from scratch each trial at the current
// embedding dimension (|stored keys| + |stored trials| + slack for the
// incoming pair + 2 padding coordinates).
// ---------------------------------------------------------------------------
class MatrixMWLearner {
 public:
  using KernelFn = std::function<double(int, int)>;

  MatrixMWLearner(MatMWConfig cfg, KernelFn kernel, const TaskSchedule& schedule)
      : cfg_(cfg), kernel_(std::move(kernel)), timek_(schedule) {
    if (!(cfg_.eta > 0.0)) throw std::invalid_argument("MatrixMWLearner: eta must be > 0");
    if (!(cfg_.gamma > 0.0)) throw std::invalid_argument("MatrixMWLearner: gamma must be > 0");
    if (!(cfg_.xk2_hat > 0.0) || !(cfg_.xp2_hat > 0.0))
      throw std::invalid_argument("MatrixMWLearner: kernel bounds must be > 0");
    if (!(cfg_.c_hat > 0.0)) throw std::invalid_argument("MatrixMWLearner: c_hat must be > 0");
    if (cfg_.T != schedule.T()) throw std::invalid_argument("MatrixMWLearner: T mismatch");
  }

  // Margin score for trial tau carrying instance key x: trace of the weight
  // matrix against the trial's rank-one embedding, minus one.
  double predict(int tau, int x) {
    // Working sets: stored keys plus x if new, stored trials plus tau.
    std::vector<int> xs = xs_;
    int xi = key_index(x);
    if (xi < 0) {
      xi = static_cast<int>(xs.size());
      xs.push_back(x);
    }
    std::vector<int> ts = ts_;
    ts.push_back(tau);
    const int nx = static_cast<int>(xs.size());
    const int nt = static_cast<int>(ts.size());
    const int d = nx + nt + 2;

    Eigen::MatrixXd Kw(nx, nx);
    for (int a = 0; a < nx; ++a)
      for (int b = 0; b < nx; ++b) Kw(a, b) = kernel_(xs[a], xs[b]);
    for (int a = 0; a < nx; ++a)
      if (Kw(a, a) > cfg_.xk2_hat * (1.0 + 1e-9))
        throw std::runtime_error("MatrixMWLearner: instance kernel exceeds its declared bound");

    Eigen::MatrixXd Pw(nt, nt);
    for (int a = 0; a < nt; ++a)
      for (int b = 0; b < nt; ++b) Pw(a, b) = timek_(ts[a], ts[b]);

    const Eigen::MatrixXd sqrtK = psd_sqrt(Kw);
    const Eigen::MatrixXd sqrtP = psd_sqrt(Pw);

    auto embed = [&](int xidx, int tidx) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
      v.segment(0, nx) = sqrtK.col(xidx) / std::sqrt(2.0 * cfg_.xk2_hat);
      v(nx) = std::sqrt(std::max(0.0, 0.5 - Kw(xidx, xidx) / (2.0 * cfg_.xk2_hat)));
      v.segment(nx + 1, nt) = sqrtP.col(tidx) / std::sqrt(2.0 * cfg_.xp2_hat);
      v(d - 1) = std::sqrt(std::max(0.0, 0.5 - Pw(tidx, tidx) / (2.0 * cfg_.xp2_hat)));
      return v;
    };

    // Exponent: scaled identity plus one rank-one term per stored update.
    // Stored update j used the j-th stored trial, so its time index is j.
    Eigen::MatrixXd E =
        std::log(cfg_.c_hat / (2.0 * cfg_.T * cfg_.m)) * Eigen::MatrixXd::Identity(d, d);
    for (std::size_t j = 0; j < upds_.size(); ++j) {
      const Eigen::VectorXd vj = embed(upds_[j].xidx, static_cast<int>(j));
      E.selfadjointView<Eigen::Lower>().rankUpdate(vj, cfg_.eta * upds_[j].y);
    }
    E = E.selfadjointView<Eigen::Lower>();

    last_W_ = matrix_exp_sym(E);
    last_v_ = embed(xi, nt - 1);
    last_trace_ = last_v_.squaredNorm();
    last_dim_ = d;
    return last_v_.dot(last_W_ * last_v_) - 1.0;
  }

  int predict_sign(double ybar, std::mt19937_64& rng) const {
    return randomized_sign(ybar, cfg_.gamma, rng);
  }

  // Margin-error update: fires iff y*ybar <= gamma (inclusive). Returns
  // whether state grew.
  bool update(int tau, int x, int y, double ybar) {
    check_label(y, "MatrixMWLearner::update");
    if (y * ybar > cfg_.gamma) return false;
    int xi = key_index(x);
    if (xi < 0) {
      xi = static_cast<int>(xs_.size());
      xs_.push_back(x);
    }
    ts_.push_back(tau);
    upds_.push_back({y, xi});
    return true;
  }

  const MatMWConfig& config() const { return cfg_; }
  int update_count() const { return static_cast<int>(upds_.size()); }
  int stored_keys() const { return static_cast<int>(xs_.size()); }
  const Eigen::MatrixXd& last_weight_matrix() const { return last_W_; }
  const Eigen::VectorXd& last_embedding() const { return last_v_; }
  double last_embedding_trace() const { return last_trace_; }
  int last_dimension() const { return last_dim_; }

 private:
  struct Upd {
    int y;
    int xidx;
  };

  int key_index(int x) const {
    for (std::size_t i = 0; i < xs_.size(); ++i)
      if (xs_[i] == x) return static_cast<int>(i);
    return -1;
  }

  MatMWConfig cfg_;
  KernelFn kernel_;
  MultitaskPathTreeKernel timek_;
  std::vector<int> xs_;    // distinct stored instance keys
  std::vector<int> ts_;    // stored trials, in update order
  std::vector<Upd> upds_;  // signed updates, aligned with ts_

  Eigen::MatrixXd last_W_;
  Eigen::VectorXd last_v_;
  double last_trace_ = 0.0;
  int last_dim_ = 0;
};

}  // namespace multiswitch
