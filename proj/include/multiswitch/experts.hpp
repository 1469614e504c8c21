#pragma once

// Linear-time multitask expert tracking with switching and long-term memory:
// a shared expert distribution pi combined per trial with a per-task memory
// vector w, plus the exponential-size specialist reference implementation it
// must match trial for trial, and a plain multiplicative-weights baseline.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "multiswitch/core.hpp"
#include "multiswitch/genbench.hpp"

namespace multiswitch {

// ---------------------------------------------------------------------------
// Tuning. Inputs describe the comparator class: n experts, s tasks, T total
// trials, at most k within-task switches, at most m distinct experts played.
// ---------------------------------------------------------------------------
struct ExpertParams {
  int n = 0, s = 0, T = 0, k = 0, m = 0;
  double rho_hat = 0.0;  // prior probability a task starts on a memory expert
  double theta = 0.0;    // probability of staying on the current expert
  double phi = 0.0;      // probability a parked expert wakes up
  double eta = 0.0;      // learning rate
  double C = 0.0;        // comparator-class complexity (nats)
};

inline void check_expert_inputs(int n, int s, int T, int k, int m) {
  if (n < 1) throw std::invalid_argument("expert tuning: n must be >= 1");
  if (s < 1) throw std::invalid_argument("expert tuning: s must be >= 1");
  if (T <= s) throw std::invalid_argument("expert tuning: need T > s (every task has a trial)");
  if (m < 2) throw std::invalid_argument("expert tuning: m must be >= 2");
  if (m > n) throw std::invalid_argument("expert tuning: m cannot exceed n");
  if (k < 0 || k > T - s) throw std::invalid_argument("expert tuning: k must lie in [0, T-s]");
}

// Comparator-class complexity in nats:
//   C = m ln(n/m) + s m H(1/m) + (T-s) H(k/(T-s)) + (m-1)(T-s) H(k/((m-1)(T-s)))
// For k = 0 both entropy terms vanish.
inline double entropy_complexity(int n, int s, int T, int k, int m) {
  check_expert_inputs(n, s, T, k, m);
  const double Ts = static_cast<double>(T - s);
  double C = m * std::log(static_cast<double>(n) / m) + s * m * binary_entropy(1.0 / m);
  C += Ts * binary_entropy(k / Ts);
  C += (m - 1) * Ts * binary_entropy(k / ((m - 1) * Ts));
  return C;
}

// Closed-form upper estimate of the same complexity (no entropy calls):
//   C <= m ln(n/m) + s(ln m + 1) + k(ln(m-1) + 2 ln((T-s)/k) + 2).
inline double entropy_complexity_upper(int n, int s, int T, int k, int m) {
  check_expert_inputs(n, s, T, k, m);
  double C = m * std::log(static_cast<double>(n) / m) + s * (std::log(static_cast<double>(m)) + 1.0);
  if (k > 0)
    C += k * (std::log(static_cast<double>(m - 1)) + 2.0 * std::log((T - s) / static_cast<double>(k)) + 2.0);
  return C;
}

// Expected-regret bound for the tuned learner on [0,1] losses.
inline double switching_regret_bound(int n, int s, int T, int k, int m) {
  return std::sqrt(2.0 * entropy_complexity(n, s, T, k, m) * T);
}

inline ExpertParams tune_params(int n, int s, int T, int k, int m) {
  check_expert_inputs(n, s, T, k, m);
  ExpertParams p;
  p.n = n; p.s = s; p.T = T; p.k = k; p.m = m;
  p.rho_hat = 1.0 / m;
  p.theta = 1.0 - static_cast<double>(k) / (T - s);
  p.phi = static_cast<double>(k) / ((m - 1) * static_cast<double>(T - s));
  p.C = entropy_complexity(n, s, T, k, m);
  p.eta = std::sqrt(2.0 * p.C / T);
  return p;
}

// ---------------------------------------------------------------------------
// The linear-time learner. State: shared distribution pi over n experts and
// one memory vector w^l in [0,1]^n per task. Updates touch only the routed
// task's memory and run in O(n) per trial.
// ---------------------------------------------------------------------------
class SwitchingExperts {
 public:
  explicit SwitchingExperts(const ExpertParams& p) : p_(p) {
    if (p.n < 1 || p.s < 1) throw std::invalid_argument("SwitchingExperts: bad dimensions");
    pi_ = Eigen::VectorXd::Constant(p.n, 1.0 / p.n);
    w_ = Eigen::MatrixXd::Constant(p.s, p.n, p.rho_hat);
  }

  // Prediction distribution for a trial of `task`: v = pi .* w / <pi, w>.
  Eigen::VectorXd distribution(int task) const {
    check_task(task);
    Eigen::VectorXd num = pi_.cwiseProduct(w_.row(task - 1).transpose());
    const double z = num.sum();
    if (!(z > 0.0)) throw std::runtime_error("SwitchingExperts: degenerate prediction weights");
    return num / z;
  }

  // Sample an expert id from distribution(task) by inverse CDF; a draw that
  // lands exactly on a bucket boundary resolves to the lower index.
  int sample(int task, std::mt19937_64& rng) const {
    const Eigen::VectorXd v = distribution(task);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double cum = 0.0;
    for (int i = 0; i < p_.n; ++i) {
      cum += v(i);
      if (u <= cum) return i;
    }
    return p_.n - 1;
  }

  double expected_loss(int task, const Eigen::VectorXd& losses) const {
    check_losses(losses);
    return distribution(task).dot(losses);
  }

  // Multiplicative update after observing the loss vector on `task`.
  // pi absorbs a per-expert factor eps = 1 - w + beta*delta whose pi-average
  // is exactly 1, so pi stays normalized without renormalization; w is mapped
  // through the stay/wake mixture and stays inside [0,1].
  void update(int task, const Eigen::VectorXd& losses) {
    check_task(task);
    check_losses(losses);
    Eigen::ArrayXd w = w_.row(task - 1).transpose().array();
    Eigen::ArrayXd pi = pi_.array();

    const Eigen::ArrayXd delta = w * (-p_.eta * losses.array()).exp();
    const double pw = (pi * w).sum();
    const double pd = (pi * delta).sum();
    if (!(pd > 0.0)) throw std::runtime_error("SwitchingExperts: degenerate update weights");
    const double beta = pw / pd;

    Eigen::ArrayXd eps = 1.0 - w + beta * delta;
    for (int i = 0; i < p_.n; ++i)
      if (eps(i) < kFloor) { eps(i) = kFloor; ++degeneracies_; }

    Eigen::ArrayXd w_new = (p_.phi * (1.0 - w) + p_.theta * beta * delta) / eps;
    for (int i = 0; i < p_.n; ++i) {
      if (w_new(i) < kFloor) { w_new(i) = kFloor; ++degeneracies_; }
      if (w_new(i) > 1.0) w_new(i) = 1.0;  // shave float overshoot
    }

    Eigen::ArrayXd pi_new = pi * eps;
    for (int i = 0; i < p_.n; ++i)
      if (pi_new(i) < kFloor) { pi_new(i) = kFloor; ++degeneracies_; }

    pi_ = pi_new.matrix();
    w_.row(task - 1) = w_new.matrix().transpose();
  }

  const Eigen::VectorXd& pi() const { return pi_; }
  Eigen::VectorXd task_memory(int task) const {
    check_task(task);
    return w_.row(task - 1).transpose();
  }
  const ExpertParams& params() const { return p_; }
  long degeneracy_count() const { return degeneracies_; }

 private:
  static constexpr double kFloor = 1e-300;

  void check_task(int task) const {
    if (task < 1 || task > p_.s) throw std::out_of_range("SwitchingExperts: bad task id");
  }
  void check_losses(const Eigen::VectorXd& losses) const {
    if (losses.size() != p_.n) throw std::invalid_argument("SwitchingExperts: loss vector has wrong size");
    for (int i = 0; i < p_.n; ++i)
      if (!(losses(i) >= 0.0 && losses(i) <= 1.0))
        throw std::invalid_argument("SwitchingExperts: losses must lie in [0,1]");
  }

  ExpertParams p_;
  Eigen::VectorXd pi_;
  Eigen::MatrixXd w_;  // s x n, row per task
  long degeneracies_ = 0;
};

// Convenience driver: run the learner over a schedule and loss table, filling
// a ledger with expected losses vs the comparator's per-trial losses.
inline RegretLedger run_switching_experts(const ExpertParams& params, const TaskSchedule& schedule,
                                          const Eigen::MatrixXd& losses,
                                          const ComparatorSequence& comparator) {
  const int T = schedule.T();
  if (losses.rows() != T) throw std::invalid_argument("run_switching_experts: loss table has wrong height");
  SwitchingExperts learner(params);
  RegretLedger ledger;
  for (int tau = 1; tau <= T; ++tau) {
    auto [task, local] = schedule.route(tau);
    const Eigen::VectorXd l = losses.row(tau - 1).transpose();
    const double el = learner.expected_loss(task, l);
    const double cl = l(comparator.mode_at(task, local));
    ledger.add(tau, task, local, 0, el, el, cl);
    learner.update(task, l);
  }
  return ledger;
}

// ---------------------------------------------------------------------------
// Wake/sleep patterns ("circadians"): a binary word over the slots
// {(task l, local time t) : t in [T^l]}, laid out task-major as bit
// offset(l) + t - 1 of a mask. Its prior weight is a product over tasks of an
// initial factor rho(first bit) and Markov transition factors between
// consecutive local times:
//   rho(1) = rho_hat        rho(0) = 1 - rho_hat
//   rho(1->1) = theta       rho(1->0) = 1 - theta
//   rho(0->1) = phi         rho(0->0) = 1 - phi
// Weights depend only on task lengths, never on how trials interleave, and
// sum to 1 over all masks.
// ---------------------------------------------------------------------------
inline int total_slots(const TaskSchedule& schedule) {
  int M = 0;
  for (int len : schedule.lengths()) M += len;
  return M;
}

inline int slot_index(const TaskSchedule& schedule, int task, int local_time) {
  if (local_time < 1 || local_time > schedule.length(task))
    throw std::out_of_range("slot_index: local time out of range");
  return schedule.block_offset(task) + local_time - 1;
}

inline double circadian_weight(std::uint32_t mask, const TaskSchedule& schedule, double rho_hat,
                               double theta, double phi) {
  double w = 1.0;
  int off = 0;
  for (int len : schedule.lengths()) {
    int prev = (mask >> off) & 1u;
    w *= prev ? rho_hat : (1.0 - rho_hat);
    for (int t = 1; t < len; ++t) {
      const int cur = (mask >> (off + t)) & 1u;
      if (prev)
        w *= cur ? theta : (1.0 - theta);
      else
        w *= cur ? phi : (1.0 - phi);
      prev = cur;
    }
    off += len;
  }
  return w;
}

inline std::vector<std::uint32_t> enumerate_circadians(const TaskSchedule& schedule) {
  const int M = total_slots(schedule);
  if (M > 16)
    throw std::invalid_argument("enumerate_circadians: schedule has more than 16 slots");
  std::vector<std::uint32_t> all(std::size_t(1) << M);
  for (std::uint32_t mask = 0; mask < all.size(); ++mask) all[mask] = mask;
  return all;
}

// ---------------------------------------------------------------------------
// Specialist reference learner: one specialist per (expert, circadian) pair,
// initial weight weight(circadian)/n. A specialist is awake on trial tau iff
// its circadian is 1 at slot (task, local time of tau). Awake specialists
// predict with their expert and get multiplicative exp(-eta * loss) updates
// rescaled so the awake mass is preserved; asleep specialists are frozen.
// Exponential state -- only usable on tiny schedules, as a ground truth.
// ---------------------------------------------------------------------------
inline std::vector<double> specialist_hedge_run(const ExpertParams& params,
                                                const TaskSchedule& schedule,
                                                const Eigen::MatrixXd& losses) {
  const int n = params.n;
  const int T = schedule.T();
  if (losses.rows() != T || losses.cols() != n)
    throw std::invalid_argument("specialist_hedge_run: loss table has wrong shape");
  const int M = total_slots(schedule);
  if (M > 16) throw std::invalid_argument("specialist_hedge_run: schedule has more than 16 slots");

  const std::size_t masks = std::size_t(1) << M;
  std::vector<double> p(static_cast<std::size_t>(n) * masks);
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    const double w =
        circadian_weight(mask, schedule, params.rho_hat, params.theta, params.phi) / n;
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i) * masks + mask] = w;
  }

  std::vector<double> trace(T);
  for (int tau = 1; tau <= T; ++tau) {
    auto [task, local] = schedule.route(tau);
    const std::uint32_t bit = 1u << slot_index(schedule, task, local);

    double awake_mass = 0.0, expected = 0.0, renorm = 0.0;
    for (int i = 0; i < n; ++i) {
      const double li = losses(tau - 1, i);
      const double* pi = &p[static_cast<std::size_t>(i) * masks];
      double mi = 0.0;
      for (std::uint32_t mask = 0; mask < masks; ++mask)
        if (mask & bit) mi += pi[mask];
      awake_mass += mi;
      expected += mi * li;
      renorm += mi * std::exp(-params.eta * li);
    }
    if (!(awake_mass > 0.0)) throw std::runtime_error("specialist_hedge_run: no specialist awake");
    trace[tau - 1] = expected / awake_mass;

    const double scale = awake_mass / renorm;
    for (int i = 0; i < n; ++i) {
      const double f = std::exp(-params.eta * losses(tau - 1, i)) * scale;
      double* pi = &p[static_cast<std::size_t>(i) * masks];
      for (std::uint32_t mask = 0; mask < masks; ++mask)
        if (mask & bit) pi[mask] *= f;
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Plain multiplicative weights over n experts (no switching, no tasks):
// v_1 uniform, w_{t+1} = w_t .* exp(-eta * losses_t). With the tuned rate
// eta = sqrt(2 ln(n) / T) the regret to the best fixed expert is at most
// sqrt(2 ln(n) T) for losses in [0,1].
// ---------------------------------------------------------------------------
inline double mw_tuned_eta(int n, int T) {
  if (n < 2 || T < 1) throw std::invalid_argument("mw_tuned_eta: need n >= 2 and T >= 1");
  return std::sqrt(2.0 * std::log(static_cast<double>(n)) / T);
}

inline double mw_regret_bound(int n, int T) {
  if (n < 2 || T < 1) throw std::invalid_argument("mw_regret_bound: need n >= 2 and T >= 1");
  return std::sqrt(2.0 * std::log(static_cast<double>(n)) * T);
}

class MultiplicativeWeights {
 public:
  MultiplicativeWeights(int n, double eta) : eta_(eta) {
    if (n < 1) throw std::invalid_argument("MultiplicativeWeights: n must be >= 1");
    if (!(eta > 0.0)) throw std::invalid_argument("MultiplicativeWeights: eta must be > 0");
    w_ = Eigen::VectorXd::Constant(n, 1.0);
  }

  Eigen::VectorXd distribution() const { return w_ / w_.sum(); }

  void update(const Eigen::VectorXd& losses) {
    if (losses.size() != w_.size())
      throw std::invalid_argument("MultiplicativeWeights: loss vector has wrong size");
    w_ = w_.cwiseProduct((-eta_ * losses.array()).exp().matrix());
    if (w_.maxCoeff() < 1e-280) w_ *= 1e280;  // periodic rescale; distribution unchanged
  }

 private:
  double eta_;
  Eigen::VectorXd w_;
};

// Expected-loss trace of multiplicative weights on a loss table.
inline std::vector<double> mw_run(const Eigen::MatrixXd& losses, double eta) {
  MultiplicativeWeights mw(static_cast<int>(losses.cols()), eta);
  std::vector<double> trace(losses.rows());
  for (int t = 0; t < losses.rows(); ++t) {
    trace[t] = mw.distribution().dot(losses.row(t).transpose());
    mw.update(losses.row(t).transpose());
  }
  return trace;
}

}  // namespace multiswitch
