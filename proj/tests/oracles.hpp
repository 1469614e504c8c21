#pragma once

// Independent reference implementations used only by tests: deliberately
// written with plain loops / textbook methods, not by calling the library
// code they are meant to check.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <queue>
#include <set>
#include <stdexcept>
#include <vector>

namespace oracles {

// Routing by recounting the prefix: local time of trial tau is the number of
// j <= tau with the same task id.
inline std::pair<int, int> route_by_recount(const std::vector<int>& tasks, int tau) {
  const int task = tasks.at(tau - 1);
  int local = 0;
  for (int j = 0; j < tau; ++j)
    if (tasks[j] == task) ++local;
  return {task, local};
}

// Switch / mode counting by a direct scan over per-task sequences.
inline std::pair<int, int> count_by_scan(const std::vector<std::vector<int>>& per_task) {
  int k = 0;
  std::set<int> modes;
  for (const auto& seq : per_task) {
    for (std::size_t t = 0; t + 1 < seq.size(); ++t) k += (seq[t] != seq[t + 1]) ? 1 : 0;
    modes.insert(seq.begin(), seq.end());
  }
  return {k, static_cast<int>(modes.size())};
}

// All-pairs unweighted shortest paths on the complete binary tree of the
// given depth, by breadth-first search from every vertex.
inline Eigen::MatrixXi bfs_tree_distances(int depth) {
  const int N = (1 << (depth + 1)) - 1;
  std::vector<std::vector<int>> adj(N);
  for (int v = 0; 2 * v + 2 < N; ++v) {
    adj[v].push_back(2 * v + 1);
    adj[v].push_back(2 * v + 2);
    adj[2 * v + 1].push_back(v);
    adj[2 * v + 2].push_back(v);
  }
  Eigen::MatrixXi D = Eigen::MatrixXi::Constant(N, N, -1);
  for (int src = 0; src < N; ++src) {
    std::queue<int> q;
    q.push(src);
    D(src, src) = 0;
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int u : adj[v])
        if (D(src, u) < 0) {
          D(src, u) = D(src, v) + 1;
          q.push(u);
        }
    }
  }
  return D;
}

// 3x3 inverse by the adjugate formula.
inline Eigen::Matrix3d inverse3_adjugate(const Eigen::Matrix3d& A) {
  const double det = A(0, 0) * (A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1)) -
                     A(0, 1) * (A(1, 0) * A(2, 2) - A(1, 2) * A(2, 0)) +
                     A(0, 2) * (A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0));
  if (std::abs(det) < 1e-14) throw std::runtime_error("inverse3_adjugate: singular");
  Eigen::Matrix3d C;
  C(0, 0) = A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1);
  C(0, 1) = -(A(1, 0) * A(2, 2) - A(1, 2) * A(2, 0));
  C(0, 2) = A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0);
  C(1, 0) = -(A(0, 1) * A(2, 2) - A(0, 2) * A(2, 1));
  C(1, 1) = A(0, 0) * A(2, 2) - A(0, 2) * A(2, 0);
  C(1, 2) = -(A(0, 0) * A(2, 1) - A(0, 1) * A(2, 0));
  C(2, 0) = A(0, 1) * A(1, 2) - A(0, 2) * A(1, 1);
  C(2, 1) = -(A(0, 0) * A(1, 2) - A(0, 2) * A(1, 0));
  C(2, 2) = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
  return C.transpose() / det;
}

// Matrix exponential by scaling and squaring with a truncated Taylor series:
// scale S by 2^-q until its max-row-sum norm is at most 1/4, sum 24 Taylor
// terms, then square q times. Works for any square matrix; used to check the
// eigendecomposition route on symmetric input.
inline Eigen::MatrixXd matrix_exp_squaring(const Eigen::MatrixXd& S) {
  const int d = static_cast<int>(S.rows());
  double norm = 0.0;
  for (int i = 0; i < d; ++i) norm = std::max(norm, S.row(i).cwiseAbs().sum());
  int q = 0;
  while (norm > 0.25) {
    norm /= 2.0;
    ++q;
  }
  const Eigen::MatrixXd A = S / std::pow(2.0, q);
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(d, d);
  for (int kk = 1; kk <= 24; ++kk) {
    term = (term * A) / kk;
    result += term;
  }
  for (int i = 0; i < q; ++i) result = result * result;
  return result;
}

// Plain-loop reimplementation of the expert learner's single-trial update,
// for elementwise comparison against the vectorized one.
struct ScalarExpertsState {
  std::vector<double> pi;
  std::vector<std::vector<double>> w;  // per task
};

inline std::vector<double> scalar_experts_distribution(const ScalarExpertsState& st, int task) {
  const auto& w = st.w.at(task - 1);
  const int n = static_cast<int>(st.pi.size());
  double z = 0.0;
  for (int i = 0; i < n; ++i) z += st.pi[i] * w[i];
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = st.pi[i] * w[i] / z;
  return v;
}

inline void scalar_experts_update(ScalarExpertsState& st, int task, const std::vector<double>& losses,
                                  double eta, double theta, double phi) {
  auto& w = st.w.at(task - 1);
  const int n = static_cast<int>(st.pi.size());
  std::vector<double> delta(n);
  double pw = 0.0, pd = 0.0;
  for (int i = 0; i < n; ++i) {
    delta[i] = w[i] * std::exp(-eta * losses[i]);
    pw += st.pi[i] * w[i];
    pd += st.pi[i] * delta[i];
  }
  const double beta = pw / pd;
  for (int i = 0; i < n; ++i) {
    const double eps = 1.0 - w[i] + beta * delta[i];
    w[i] = (phi * (1.0 - w[i]) + theta * beta * delta[i]) / eps;
    st.pi[i] *= eps;
  }
}

// Wake/sleep prior over per-task binary words that carry one slot more than
// the task length; marginalizing the extra slot must reproduce the shortened
// prior used by the library. bits[i] holds lengths[i]+1 entries in {0,1}.
inline double full_circadian_weight(const std::vector<int>& lengths,
                                    const std::vector<std::vector<int>>& bits, double rho_hat,
                                    double theta, double phi) {
  double w = 1.0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const auto& b = bits[i];
    if (static_cast<int>(b.size()) != lengths[i] + 1)
      throw std::invalid_argument("full_circadian_weight: word length mismatch");
    w *= b[0] ? rho_hat : (1.0 - rho_hat);
    for (std::size_t t = 0; t + 1 < b.size(); ++t) {
      if (b[t])
        w *= b[t + 1] ? theta : (1.0 - theta);
      else
        w *= b[t + 1] ? phi : (1.0 - phi);
    }
  }
  return w;
}

// Sum of full_circadian_weight over all extensions of a shortened word
// (given per task as the first lengths[i] bits).
inline double full_circadian_marginal(const std::vector<int>& lengths,
                                      const std::vector<std::vector<int>>& prefix_bits,
                                      double rho_hat, double theta, double phi) {
  const int s = static_cast<int>(lengths.size());
  double total = 0.0;
  for (int ext = 0; ext < (1 << s); ++ext) {
    std::vector<std::vector<int>> bits = prefix_bits;
    for (int i = 0; i < s; ++i) bits[i].push_back((ext >> i) & 1);
    total += full_circadian_weight(lengths, bits, rho_hat, theta, phi);
  }
  return total;
}

}  // namespace oracles
