#pragma once

// Projected online gradient descent for hinge loss on a norm ball, in primal
// (explicit weight vector) and dual (support coefficients under a kernel)
// form, with randomized sign predictions.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "multiswitch/core.hpp"

namespace multiswitch {

// Tuned step size for comparator norm U, instance norm bound X, horizon T;
// the hinge regret to any comparator in the U-ball is then at most
// sqrt(U^2 X^2 T).
inline double ogd_tuned_eta(double U, double X, int T) {
  if (!(U > 0.0) || !(X > 0.0) || T < 1) throw std::invalid_argument("ogd_tuned_eta: bad inputs");
  return U / (X * std::sqrt(static_cast<double>(T)));
}

inline double ogd_hinge_regret_bound(double U, double X, int T) {
  if (!(U > 0.0) || !(X > 0.0) || T < 1)
    throw std::invalid_argument("ogd_hinge_regret_bound: bad inputs");
  return std::sqrt(U * U * X * X * T);
}

// Against a comparator sequence with at most k switches between vectors of
// norm at most B, project onto the B-ball but tune the step size as if the
// comparator norm were sqrt(4k+1) B.
struct OgdSwitchingTuning {
  double U = 0.0;      // effective comparator norm sqrt(4k+1) * B
  double gamma = 0.0;  // projection radius B
};

inline OgdSwitchingTuning ogd_switching_tuning(int k, double max_comparator_norm) {
  if (k < 0 || !(max_comparator_norm > 0.0))
    throw std::invalid_argument("ogd_switching_tuning: bad inputs");
  OgdSwitchingTuning t;
  t.gamma = max_comparator_norm;
  t.U = std::sqrt(4.0 * k + 1.0) * max_comparator_norm;
  return t;
}

// Expected zero-one regret bound on streams where the comparator has unit
// margin on every trial.
inline double ogd_expected_01_bound(double U, double X, int T) {
  return 0.5 * ogd_hinge_regret_bound(U, X, T);
}

// ---------------------------------------------------------------------------
// Primal form: w starts at zero, moves by eta*y*x on margin errors
// (y * <w,x> <= 1), and is radially projected back onto the gamma-ball.
// ---------------------------------------------------------------------------
class OnlineGradientDescent {
 public:
  OnlineGradientDescent(int dim, double eta, double gamma) : eta_(eta), gamma_(gamma) {
    if (dim < 1) throw std::invalid_argument("OnlineGradientDescent: dim must be >= 1");
    if (!(eta > 0.0) || !(gamma > 0.0))
      throw std::invalid_argument("OnlineGradientDescent: eta and gamma must be > 0");
    w_ = Eigen::VectorXd::Zero(dim);
  }

  double score(const Eigen::VectorXd& x) const {
    if (x.size() != w_.size()) throw std::invalid_argument("OnlineGradientDescent: dim mismatch");
    return w_.dot(x);
  }

  int predict_sign(double ybar, std::mt19937_64& rng) const {
    return randomized_sign(ybar, 1.0, rng);
  }

  // Returns whether the margin was violated and a step was taken.
  bool update(const Eigen::VectorXd& x, int y, double ybar) {
    if (x.size() != w_.size()) throw std::invalid_argument("OnlineGradientDescent: dim mismatch");
    check_label(y, "OnlineGradientDescent::update");
    if (y * ybar > 1.0) return false;
    w_ += eta_ * y * x;
    const double nrm = w_.norm();
    if (nrm > gamma_) w_ *= gamma_ / nrm;
    return true;
  }

  const Eigen::VectorXd& weights() const { return w_; }
  double weight_norm() const { return w_.norm(); }

 private:
  double eta_, gamma_;
  Eigen::VectorXd w_;
};

// ---------------------------------------------------------------------------
// Dual form: the weight vector is an implicit combination sum_i alpha_i
// phi(x_i) under a kernel. Projection scales every coefficient; the squared
// norm is maintained incrementally (step: +2 eta y ybar + eta^2 K(x,x);
// scaling by c: *c^2).
// ---------------------------------------------------------------------------
template <class Instance>
class KernelOGD {
 public:
  using KernelFn = std::function<double(const Instance&, const Instance&)>;

  KernelOGD(KernelFn kernel, double eta, double gamma)
      : kernel_(std::move(kernel)), eta_(eta), gamma_(gamma) {
    if (!(eta > 0.0) || !(gamma > 0.0))
      throw std::invalid_argument("KernelOGD: eta and gamma must be > 0");
  }

  double score(const Instance& x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) s += alpha_[i] * kernel_(support_[i], x);
    return s;
  }

  int predict_sign(double ybar, std::mt19937_64& rng) const {
    return randomized_sign(ybar, 1.0, rng);
  }

  // ybar must be score(x) before the update.
  bool update(const Instance& x, int y, double ybar) {
    check_label(y, "KernelOGD::update");
    if (y * ybar > 1.0) return false;
    support_.push_back(x);
    alpha_.push_back(eta_ * y);
    norm_sq_ += 2.0 * eta_ * y * ybar + eta_ * eta_ * kernel_(x, x);
    norm_sq_ = std::max(norm_sq_, 0.0);  // guard float cancellation
    const double nrm = std::sqrt(norm_sq_);
    if (nrm > gamma_) {
      const double c = gamma_ / nrm;
      for (double& a : alpha_) a *= c;
      norm_sq_ = gamma_ * gamma_;
    }
    return true;
  }

  // O(|support|^2) recomputation of ||w||^2, for checking the incremental one.
  double norm_sq_direct() const {
    double s = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i)
      for (std::size_t j = 0; j < support_.size(); ++j)
        s += alpha_[i] * alpha_[j] * kernel_(support_[i], support_[j]);
    return s;
  }

  double norm_sq() const { return norm_sq_; }
  int support_size() const { return static_cast<int>(support_.size()); }

 private:
  KernelFn kernel_;
  double eta_, gamma_;
  std::vector<Instance> support_;
  std::vector<double> alpha_;
  double norm_sq_ = 0.0;
};

}  // namespace multiswitch
