#pragma once

// Protocol types shared by all learners: multitask trial routing, losses,
// comparator bookkeeping, randomized sign predictions and regret ledgers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace multiswitch {

// ---------------------------------------------------------------------------
// Task schedule: a sequence of task ids l^1..l^T (1-based ids in [s]) that
// routes each global trial to a (task, local_time) pair. local_time of trial
// tau is the number of trials of the same task seen so far, including tau.
// ---------------------------------------------------------------------------
class TaskSchedule {
 public:
  TaskSchedule() = default;

  TaskSchedule(std::vector<int> task_ids, int task_count)
      : tasks_(std::move(task_ids)), s_(task_count) {
    if (s_ < 1) throw std::invalid_argument("TaskSchedule: task count must be >= 1");
    if (tasks_.empty()) throw std::invalid_argument("TaskSchedule: empty trial sequence");
    lengths_.assign(s_, 0);
    sigma_.resize(tasks_.size());
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      const int l = tasks_[i];
      if (l < 1 || l > s_)
        throw std::invalid_argument("TaskSchedule: task id out of range at trial " +
                                    std::to_string(i + 1));
      sigma_[i] = ++lengths_[l - 1];
    }
    for (int i = 0; i < s_; ++i)
      if (lengths_[i] == 0)
        throw std::invalid_argument("TaskSchedule: task " + std::to_string(i + 1) +
                                    " never occurs");
  }

  int T() const { return static_cast<int>(tasks_.size()); }
  int task_count() const { return s_; }
  const std::vector<int>& tasks() const { return tasks_; }
  const std::vector<int>& lengths() const { return lengths_; }
  int length(int task) const { return lengths_.at(task - 1); }

  // (task, local_time), both 1-based. tau is the 1-based global trial index.
  std::pair<int, int> route(int tau) const {
    if (tau < 1 || tau > T()) throw std::out_of_range("route: trial index out of range");
    return {tasks_[tau - 1], sigma_[tau - 1]};
  }

  // Offset of a task's contiguous block when tasks are laid out end to end:
  // sum of the lengths of all lower-numbered tasks.
  int block_offset(int task) const {
    if (task < 1 || task > s_) throw std::out_of_range("block_offset: bad task id");
    int off = 0;
    for (int i = 1; i < task; ++i) off += lengths_[i - 1];
    return off;
  }

 private:
  std::vector<int> tasks_;
  int s_ = 0;
  std::vector<int> lengths_;
  std::vector<int> sigma_;  // local time per trial, precomputed
};

// ---------------------------------------------------------------------------
// Labeled instance: an opaque key (or externally held vector) plus a +-1 label.
// ---------------------------------------------------------------------------
struct LabeledInstance {
  int x = 0;   // key into a kernel's domain
  int y = 1;   // label in {-1, +1}
};

inline void check_label(int y, const char* who) {
  if (y != 1 && y != -1) throw std::invalid_argument(std::string(who) + ": label must be -1 or +1");
}

// ---------------------------------------------------------------------------
// Comparator: one hypothesis-id sequence per task (ids dense in [0, m)).
// ---------------------------------------------------------------------------
struct ComparatorSequence {
  std::vector<std::vector<int>> per_task;  // per_task[i][t-1] = mode id of task i+1, local time t

  int mode_at(int task, int local_time) const {
    return per_task.at(task - 1).at(local_time - 1);
  }
};

// k = number of within-task adjacent disagreements; m = number of distinct
// mode ids used anywhere. Task boundaries do not count as switches.
inline std::pair<int, int> count_switches_modes(const ComparatorSequence& c) {
  int k = 0;
  std::set<int> modes;
  for (const auto& seq : c.per_task) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      modes.insert(seq[t]);
      if (t + 1 < seq.size() && seq[t] != seq[t + 1]) ++k;
    }
  }
  return {k, static_cast<int>(modes.size())};
}

// ---------------------------------------------------------------------------
// Losses.
// ---------------------------------------------------------------------------
inline int zero_one_loss(int y, int yhat) {
  check_label(y, "zero_one_loss");
  check_label(yhat, "zero_one_loss");
  return y == yhat ? 0 : 1;
}

inline double hinge_loss(int y, double ybar) {
  check_label(y, "hinge_loss");
  return std::max(0.0, 1.0 - static_cast<double>(y) * ybar);
}

// ---------------------------------------------------------------------------
// Randomized sign prediction: draw Y ~ Uniform(-gamma, gamma) and output
// sign(ybar - Y). Deterministically +1 once ybar >= gamma, -1 once
// ybar <= -gamma; in between the probability ramps linearly.
// ---------------------------------------------------------------------------
inline double prob_sign_positive(double ybar, double gamma) {
  if (gamma <= 0.0) throw std::invalid_argument("prob_sign_positive: gamma must be > 0");
  return std::clamp((ybar + gamma) / (2.0 * gamma), 0.0, 1.0);
}

inline int randomized_sign(double ybar, double gamma, std::mt19937_64& rng) {
  if (gamma <= 0.0) throw std::invalid_argument("randomized_sign: gamma must be > 0");
  std::uniform_real_distribution<double> unif(-gamma, gamma);
  return ybar - unif(rng) >= 0.0 ? 1 : -1;
}

// Closed-form expected zero-one loss of the randomized sign prediction.
inline double expected_zero_one(int y, double ybar, double gamma) {
  check_label(y, "expected_zero_one");
  const double p = prob_sign_positive(ybar, gamma);
  return y == 1 ? 1.0 - p : p;
}

// ---------------------------------------------------------------------------
// Regret ledger: per-trial expected learner loss vs comparator loss, with the
// cumulative regret maintained as an exact prefix sum of their differences.
// Expected losses are recorded (not sampled ones) so regret checks against
// closed-form bounds are deterministic.
// ---------------------------------------------------------------------------
struct RegretLedger {
  struct Row {
    int trial = 0;       // 1-based global trial
    int task = 0;        // 1-based task id
    int local_time = 0;  // 1-based within-task time
    int y = 0;           // label, or 0 when the run has no labels (allocation losses)
    double score = 0.0;  // margin ybar for sign learners, v.losses for weight learners
    double expected_loss = 0.0;
    double comparator_loss = 0.0;
    double cum_regret = 0.0;
  };

  std::vector<Row> rows;

  void add(int trial, int task, int local_time, int y, double score, double expected_loss,
           double comparator_loss) {
    if (expected_loss < -1e-12 || expected_loss > 1.0 + 1e-12)
      throw std::invalid_argument("RegretLedger: expected loss outside [0,1]");
    Row r;
    r.trial = trial;
    r.task = task;
    r.local_time = local_time;
    r.y = y;
    r.score = score;
    r.expected_loss = std::clamp(expected_loss, 0.0, 1.0);
    r.comparator_loss = comparator_loss;
    const double prev = rows.empty() ? 0.0 : rows.back().cum_regret;
    r.cum_regret = prev + (r.expected_loss - r.comparator_loss);
    rows.push_back(r);
  }

  double final_regret() const { return rows.empty() ? 0.0 : rows.back().cum_regret; }

  double total_expected_loss() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.expected_loss;
    return s;
  }

  double total_comparator_loss() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.comparator_loss;
    return s;
  }
};

}  // namespace multiswitch
