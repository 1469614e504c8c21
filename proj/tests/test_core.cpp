#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <utility>
#include <vector>

#include "multiswitch/core.hpp"
#include "oracles.hpp"

using namespace multiswitch;
using Catch::Matchers::WithinAbs;

TEST_CASE("routing returns task and within-task time", "[core]") {
  TaskSchedule sched({1, 2, 1}, 2);
  CHECK(sched.route(1) == std::pair{1, 1});
  CHECK(sched.route(2) == std::pair{2, 1});
  CHECK(sched.route(3) == std::pair{1, 2});
  CHECK(sched.T() == 3);
  CHECK(sched.task_count() == 2);
  CHECK(sched.lengths() == std::vector<int>{2, 1});
}

TEST_CASE("routing matches a prefix recount on random schedules", "[core]") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 60; ++rep) {
    const int s = 1 + static_cast<int>(rng() % 4);
    std::vector<int> tasks;
    for (int i = 1; i <= s; ++i) tasks.push_back(i);  // every task occurs
    const int extra = static_cast<int>(rng() % 25);
    for (int e = 0; e < extra; ++e) tasks.push_back(1 + static_cast<int>(rng() % s));
    std::shuffle(tasks.begin(), tasks.end(), rng);

    TaskSchedule sched(tasks, s);
    for (int tau = 1; tau <= sched.T(); ++tau)
      CHECK(sched.route(tau) == oracles::route_by_recount(tasks, tau));
  }
}

TEST_CASE("schedule validation", "[core]") {
  CHECK_THROWS_AS(TaskSchedule({}, 1), std::invalid_argument);
  CHECK_THROWS_AS(TaskSchedule({1, 3}, 2), std::invalid_argument);  // id out of range
  CHECK_THROWS_AS(TaskSchedule({0, 1}, 1), std::invalid_argument);
  CHECK_THROWS_AS(TaskSchedule({1, 1}, 2), std::invalid_argument);  // task 2 never occurs
  CHECK_THROWS_AS(TaskSchedule({1}, 0), std::invalid_argument);
  TaskSchedule ok({2, 1}, 2);
  CHECK_THROWS_AS(ok.route(0), std::out_of_range);
  CHECK_THROWS_AS(ok.route(3), std::out_of_range);
}

TEST_CASE("block offsets accumulate lower task lengths", "[core]") {
  TaskSchedule sched({1, 1, 2, 2, 2, 3}, 3);  // lengths 2, 3, 1
  CHECK(sched.block_offset(1) == 0);
  CHECK(sched.block_offset(2) == 2);
  CHECK(sched.block_offset(3) == 5);
}

TEST_CASE("switch and mode counting", "[core]") {
  ComparatorSequence c;
  c.per_task = {{0, 0, 1}, {1, 2}};
  const auto [k, m] = count_switches_modes(c);
  CHECK(k == 2);  // task boundaries are not switches
  CHECK(m == 3);
  CHECK(c.mode_at(1, 3) == 1);
  CHECK(c.mode_at(2, 2) == 2);

  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 40; ++rep) {
    ComparatorSequence r;
    const int s = 1 + static_cast<int>(rng() % 3);
    r.per_task.resize(s);
    for (auto& seq : r.per_task) {
      const int len = 1 + static_cast<int>(rng() % 10);
      for (int t = 0; t < len; ++t) seq.push_back(static_cast<int>(rng() % 4));
    }
    CHECK(count_switches_modes(r) == oracles::count_by_scan(r.per_task));
  }
}

TEST_CASE("loss truth tables", "[core]") {
  CHECK(zero_one_loss(1, 1) == 0);
  CHECK(zero_one_loss(1, -1) == 1);
  CHECK(zero_one_loss(-1, 1) == 1);
  CHECK(zero_one_loss(-1, -1) == 0);
  CHECK_THROWS_AS(zero_one_loss(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(zero_one_loss(1, 2), std::invalid_argument);

  CHECK_THAT(hinge_loss(1, 1.0), WithinAbs(0.0, 1e-15));
  CHECK_THAT(hinge_loss(1, 0.0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(hinge_loss(1, -0.5), WithinAbs(1.5, 1e-15));
  CHECK_THAT(hinge_loss(-1, -2.0), WithinAbs(0.0, 1e-15));
  CHECK_THAT(hinge_loss(-1, 0.25), WithinAbs(1.25, 1e-15));
  CHECK_THROWS_AS(hinge_loss(2, 0.0), std::invalid_argument);
}

TEST_CASE("randomized sign closed-form probabilities", "[core]") {
  CHECK_THAT(prob_sign_positive(0.0, 1.0), WithinAbs(0.5, 1e-15));
  CHECK_THAT(prob_sign_positive(0.5, 1.0), WithinAbs(0.75, 1e-15));
  CHECK_THAT(prob_sign_positive(-0.5, 1.0), WithinAbs(0.25, 1e-15));
  CHECK_THAT(prob_sign_positive(1.0, 1.0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(prob_sign_positive(-3.0, 1.0), WithinAbs(0.0, 1e-15));
  CHECK_THAT(prob_sign_positive(0.1, 0.2), WithinAbs(0.75, 1e-15));
  CHECK_THROWS_AS(prob_sign_positive(0.0, 0.0), std::invalid_argument);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(randomized_sign(0.0, -1.0, rng), std::invalid_argument);
}

TEST_CASE("randomized sign is deterministic beyond the randomization band", "[core]") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    CHECK(randomized_sign(2.0, 1.0, rng) == 1);
    CHECK(randomized_sign(-2.0, 1.0, rng) == -1);
    CHECK(randomized_sign(1.0 + 1e-12, 1.0, rng) == 1);
  }
}

TEST_CASE("randomized sign empirical frequencies match the closed form", "[core]") {
  std::mt19937_64 rng(5);
  const int N = 40000;
  for (double ybar : {0.0, 0.5, -0.7}) {
    int pos = 0;
    for (int i = 0; i < N; ++i) pos += randomized_sign(ybar, 1.0, rng) == 1 ? 1 : 0;
    const double phat = static_cast<double>(pos) / N;
    // 4 sigma of a Bernoulli at p in [0.15, 0.75]
    CHECK_THAT(phat, WithinAbs(prob_sign_positive(ybar, 1.0), 4.0 * 0.5 / std::sqrt(double(N))));
  }
}

TEST_CASE("expected zero-one is half the hinge inside the band and never more", "[core]") {
  // Exact equality on |ybar| < 1 at unit randomization width.
  for (int i = -99; i <= 99; ++i) {
    const double ybar = i / 100.0;
    for (int y : {1, -1})
      CHECK_THAT(2.0 * expected_zero_one(y, ybar, 1.0), WithinAbs(hinge_loss(y, ybar), 1e-12));
  }
  // Domination everywhere.
  for (int i = -300; i <= 300; ++i) {
    const double ybar = i / 100.0;
    for (int y : {1, -1})
      CHECK(2.0 * expected_zero_one(y, ybar, 1.0) <= hinge_loss(y, ybar) + 1e-12);
  }
}

TEST_CASE("regret ledger keeps exact prefix sums", "[core]") {
  RegretLedger ledger;
  CHECK_THAT(ledger.final_regret(), WithinAbs(0.0, 0.0));

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> el, cl;
  for (int t = 1; t <= 500; ++t) {
    el.push_back(unif(rng));
    cl.push_back(unif(rng));
    ledger.add(t, 1, t, 0, el.back(), el.back(), cl.back());
  }
  double cum = 0.0;
  for (int t = 0; t < 500; ++t) {
    cum += el[t] - cl[t];
    CHECK_THAT(ledger.rows[t].cum_regret, WithinAbs(cum, 1e-12));
  }
  CHECK_THAT(ledger.final_regret(), WithinAbs(cum, 1e-12));
  CHECK_THAT(ledger.total_expected_loss() - ledger.total_comparator_loss(), WithinAbs(cum, 1e-9));

  CHECK_THROWS_AS(ledger.add(501, 1, 501, 0, 1.5, 1.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ledger.add(501, 1, 501, 0, -0.1, -0.1, 0.0), std::invalid_argument);
}
