#pragma once

// Seeded problem generators (schedules, switching comparators, biclustered
// label matrices, adversarial expert losses, realizable linear streams) and
// the bound-vs-measurement evaluation report.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "multiswitch/core.hpp"

namespace multiswitch {

// H(p) = -p ln p - (1-p) ln(1-p), natural log, with H(0) = H(1) = 0.
inline double binary_entropy(double p) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("binary_entropy: p outside [0,1]");
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
  return h;
}

// ---------------------------------------------------------------------------
// Schedules: uniformly random interleaving of the given per-task lengths.
// ---------------------------------------------------------------------------
inline TaskSchedule gen_schedule(const std::vector<int>& lengths, std::uint64_t seed) {
  const int s = static_cast<int>(lengths.size());
  if (s < 1) throw std::invalid_argument("gen_schedule: need at least one task");
  std::vector<int> tasks;
  for (int i = 0; i < s; ++i) {
    if (lengths[i] < 1) throw std::invalid_argument("gen_schedule: every task length must be >= 1");
    tasks.insert(tasks.end(), lengths[i], i + 1);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(tasks.begin(), tasks.end(), rng);
  return TaskSchedule(std::move(tasks), s);
}

// ---------------------------------------------------------------------------
// Switching comparator with exactly k within-task switches and exactly m
// distinct modes. Switch positions are drawn uniformly without replacement
// from the T-s legal within-task boundaries; segment modes are sampled
// uniformly subject to adjacent-segments-differ, with a repair pass that
// recolors duplicate-mode segments when fewer than m modes came up.
// ---------------------------------------------------------------------------
inline ComparatorSequence gen_switching_comparator(const std::vector<int>& lengths, int k, int m,
                                                   std::uint64_t seed) {
  const int s = static_cast<int>(lengths.size());
  if (s < 1) throw std::invalid_argument("gen_switching_comparator: need at least one task");
  int T = 0;
  for (int len : lengths) {
    if (len < 1)
      throw std::invalid_argument("gen_switching_comparator: every task length must be >= 1");
    T += len;
  }
  if (k < 0 || k > T - s)
    throw std::invalid_argument("gen_switching_comparator: k must lie in [0, T-s]");
  if (m < 1) throw std::invalid_argument("gen_switching_comparator: m must be >= 1");
  if (m > k + s)
    throw std::invalid_argument("gen_switching_comparator: m cannot exceed k+s segments");
  if (k >= 1 && m < 2)
    throw std::invalid_argument("gen_switching_comparator: a switch needs at least two modes");

  std::mt19937_64 rng(seed);

  // Legal switch positions: (task i, boundary after local time t), t < T^i.
  std::vector<std::pair<int, int>> boundaries;
  for (int i = 0; i < s; ++i)
    for (int t = 1; t < lengths[i]; ++t) boundaries.emplace_back(i, t);
  std::shuffle(boundaries.begin(), boundaries.end(), rng);
  boundaries.resize(k);

  // Per-task segment lengths delimited by the chosen boundaries.
  std::vector<std::vector<int>> cuts(s);  // sorted boundary local-times per task
  for (auto [i, t] : boundaries) cuts[i].push_back(t);
  for (auto& c : cuts) std::sort(c.begin(), c.end());

  struct Segment {
    int task;  // 0-based here
    int len;
    int mode = -1;
  };
  std::vector<Segment> segs;
  std::vector<std::pair<int, int>> task_seg_range(s);  // [first, last) into segs
  for (int i = 0; i < s; ++i) {
    int prev = 0;
    const int first = static_cast<int>(segs.size());
    for (int t : cuts[i]) {
      segs.push_back({i, t - prev});
      prev = t;
    }
    segs.push_back({i, lengths[i] - prev});
    task_seg_range[i] = {first, static_cast<int>(segs.size())};
  }

  std::uniform_int_distribution<int> pick(0, m - 1);
  auto assign_modes = [&]() {
    for (int i = 0; i < s; ++i) {
      int prev_mode = -1;
      for (int j = task_seg_range[i].first; j < task_seg_range[i].second; ++j) {
        int mode = pick(rng);
        while (mode == prev_mode) mode = pick(rng);  // adjacent segments must differ
        segs[j].mode = mode;
        prev_mode = mode;
      }
    }
  };
  auto distinct_modes = [&]() {
    std::set<int> used;
    for (const auto& sg : segs) used.insert(sg.mode);
    return used;
  };

  // Rejection keeps assignments uniform when it succeeds quickly.
  std::set<int> used;
  for (int attempt = 0; attempt < 200; ++attempt) {
    assign_modes();
    used = distinct_modes();
    if (static_cast<int>(used.size()) == m) break;
  }
  // Repair: while a mode is missing, recolor a segment whose mode occurs
  // twice. The missing mode is unused, so adjacency cannot be violated.
  while (static_cast<int>(used.size()) < m) {
    int missing = 0;
    while (used.count(missing)) ++missing;
    std::vector<int> counts(m, 0);
    for (const auto& sg : segs) ++counts[sg.mode];
    std::vector<int> candidates;
    for (int j = 0; j < static_cast<int>(segs.size()); ++j)
      if (counts[segs[j].mode] >= 2) candidates.push_back(j);
    if (candidates.empty())
      throw std::runtime_error("gen_switching_comparator: repair stalled");  // unreachable: m <= k+s
    std::uniform_int_distribution<int> pc(0, static_cast<int>(candidates.size()) - 1);
    segs[candidates[pc(rng)]].mode = missing;
    used = distinct_modes();
  }

  // Relabel modes by first appearance so ids are dense in [0, m).
  std::vector<int> relabel(m, -1);
  int next = 0;
  for (auto& sg : segs)
    if (relabel[sg.mode] == -1) relabel[sg.mode] = next++;
  for (auto& sg : segs) sg.mode = relabel[sg.mode];

  ComparatorSequence comp;
  comp.per_task.resize(s);
  for (const auto& sg : segs)
    comp.per_task[sg.task].insert(comp.per_task[sg.task].end(), sg.len, sg.mode);
  return comp;
}

// ---------------------------------------------------------------------------
// Biclustered matrix completion problem: p row objects, m latent modes,
// labels y^tau = U*(x^tau, mode(tau)) with U* in {-1,+1}^{p x m} having
// distinct columns and C the one-hot trial->mode expansion (rank m).
// ---------------------------------------------------------------------------
struct BiclusteredProblem {
  TaskSchedule schedule;
  ComparatorSequence comparator;
  Eigen::MatrixXi U_star;  // p x m, entries +-1, columns pairwise distinct
  Eigen::MatrixXi C;       // T x m, one-hot rows
  std::vector<int> keys;   // instance key per trial, in [0, p)
  std::vector<int> labels; // +-1 per trial
};

inline BiclusteredProblem gen_biclustered_labels(int p, int m, const std::vector<int>& lengths,
                                                 int k, std::uint64_t seed) {
  if (p < 1) throw std::invalid_argument("gen_biclustered_labels: p must be >= 1");
  if (m < 1) throw std::invalid_argument("gen_biclustered_labels: m must be >= 1");
  if (p < 63 && (1LL << p) < m)
    throw std::invalid_argument("gen_biclustered_labels: cannot make m distinct +-1 columns of height p");

  BiclusteredProblem prob;
  prob.schedule = gen_schedule(lengths, seed * 2654435761ULL + 1);
  prob.comparator = gen_switching_comparator(lengths, k, m, seed * 2654435761ULL + 2);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coin(0, 1);

  // Distinct +-1 columns by rejection; feasible since 2^p >= m.
  prob.U_star.resize(p, m);
  std::set<std::vector<int>> seen;
  for (int j = 0; j < m; ++j) {
    std::vector<int> col(p);
    do {
      for (int i = 0; i < p; ++i) col[i] = coin(rng) ? 1 : -1;
    } while (seen.count(col));
    seen.insert(col);
    for (int i = 0; i < p; ++i) prob.U_star(i, j) = col[i];
  }

  const int T = prob.schedule.T();
  prob.C.setZero(T, m);
  prob.keys.resize(T);
  prob.labels.resize(T);
  std::uniform_int_distribution<int> pick_key(0, p - 1);
  for (int tau = 1; tau <= T; ++tau) {
    auto [task, local] = prob.schedule.route(tau);
    const int mode = prob.comparator.mode_at(task, local);
    prob.C(tau - 1, mode) = 1;
    prob.keys[tau - 1] = pick_key(rng);
    prob.labels[tau - 1] = prob.U_star(prob.keys[tau - 1], mode);
  }
  return prob;
}

// ---------------------------------------------------------------------------
// Expert-advice loss tables planted around a switching comparator: on each
// trial the comparator's current expert suffers Bernoulli(noise) loss and
// every other expert suffers Bernoulli(1/2) loss. Mode id j plays expert j.
// ---------------------------------------------------------------------------
inline Eigen::MatrixXd gen_adversarial_expert_losses(int n, const TaskSchedule& schedule,
                                                     const ComparatorSequence& comparator,
                                                     double noise, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_adversarial_expert_losses: n must be >= 1");
  if (noise < 0.0 || noise >= 0.5)
    throw std::invalid_argument("gen_adversarial_expert_losses: noise must lie in [0, 0.5)");
  const auto [k, m] = count_switches_modes(comparator);
  (void)k;
  if (m > n)
    throw std::invalid_argument("gen_adversarial_expert_losses: comparator uses more modes than experts");

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution noisy(noise);
  std::bernoulli_distribution fair(0.5);

  const int T = schedule.T();
  Eigen::MatrixXd losses(T, n);
  for (int tau = 1; tau <= T; ++tau) {
    auto [task, local] = schedule.route(tau);
    const int good = comparator.mode_at(task, local);
    for (int i = 0; i < n; ++i)
      losses(tau - 1, i) = (i == good ? (noisy(rng) ? 1.0 : 0.0) : (fair(rng) ? 1.0 : 0.0));
  }
  return losses;
}

// ---------------------------------------------------------------------------
// Realizable linear-classification streams for gradient-descent runs: unit
// comparator vectors u_1..u_T (piecewise constant with exactly k switches,
// all switches at uniformly random positions), instances scaled so that
// every trial has margin |<u_t, x_t>| = 1 and ||x_t|| <= X.
// ---------------------------------------------------------------------------
struct LinearStream {
  Eigen::MatrixXd X;            // T x dim instances
  std::vector<int> y;           // +-1 labels, y_t = sign(<u_t, x_t>)
  Eigen::MatrixXd U;            // T x dim comparator vector per trial (unit norm)
  int switches = 0;             // number of t with u_t != u_{t+1}
  double x_norm_bound = 0.0;    // max_t ||x_t||
};

inline LinearStream gen_linear_stream(int dim, int T, int k, std::uint64_t seed) {
  if (dim < 1 || T < 1) throw std::invalid_argument("gen_linear_stream: dim and T must be >= 1");
  if (k < 0 || k > T - 1) throw std::invalid_argument("gen_linear_stream: k must lie in [0, T-1]");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto unit_vec = [&]() {
    Eigen::VectorXd v(dim);
    double nrm = 0.0;
    while (nrm < 1e-8) {
      for (int i = 0; i < dim; ++i) v(i) = gauss(rng);
      nrm = v.norm();
    }
    return Eigen::VectorXd(v / nrm);
  };

  // Switch positions: k boundaries chosen uniformly among the T-1 gaps.
  std::vector<int> gaps(T - 1);
  std::iota(gaps.begin(), gaps.end(), 1);  // boundary after trial t
  std::shuffle(gaps.begin(), gaps.end(), rng);
  gaps.resize(k);
  std::sort(gaps.begin(), gaps.end());

  LinearStream st;
  st.X.resize(T, dim);
  st.U.resize(T, dim);
  st.y.resize(T);
  st.switches = k;

  Eigen::VectorXd u = unit_vec();
  std::size_t next_gap = 0;
  for (int t = 1; t <= T; ++t) {
    if (next_gap < gaps.size() && t == gaps[next_gap] + 1) {
      Eigen::VectorXd u2 = unit_vec();
      while ((u2 - u).norm() < 1e-6) u2 = unit_vec();  // a switch must change the vector
      u = u2;
      ++next_gap;
    }
    // Reject near-orthogonal draws, then rescale so the margin is exactly 1.
    Eigen::VectorXd x = unit_vec();
    while (std::abs(u.dot(x)) < 0.2) x = unit_vec();
    x /= std::abs(u.dot(x));  // now |<u, x>| = 1, ||x|| <= 5
    st.X.row(t - 1) = x.transpose();
    st.U.row(t - 1) = u.transpose();
    st.y[t - 1] = u.dot(x) >= 0.0 ? 1 : -1;
    st.x_norm_bound = std::max(st.x_norm_bound, x.norm());
  }
  return st;
}

// ---------------------------------------------------------------------------
// Evaluation: measured regret against a closed-form bound.
// ---------------------------------------------------------------------------
struct EvalReport {
  double final_regret = 0.0;
  double bound = 0.0;
  bool bound_satisfied = true;
  int trials = 0;
  int mistakes = 0;  // trials whose expected loss reached 1/2
  double total_expected_loss = 0.0;
  double total_comparator_loss = 0.0;
};

inline EvalReport evaluate(const RegretLedger& ledger, double bound) {
  EvalReport rep;
  rep.final_regret = ledger.final_regret();
  rep.bound = bound;
  rep.bound_satisfied = rep.final_regret <= bound;
  rep.trials = static_cast<int>(ledger.rows.size());
  for (const auto& r : ledger.rows)
    if (r.expected_loss >= 0.5) ++rep.mistakes;
  rep.total_expected_loss = ledger.total_expected_loss();
  rep.total_comparator_loss = ledger.total_comparator_loss();
  return rep;
}

}  // namespace multiswitch
