#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dta/errors.hpp"
#include "dta/gridworld.hpp"
#include "dta/mdp.hpp"
#include "dta/tabular.hpp"

using namespace dta;
using namespace dta::learners;

TEST_CASE("epsilon schedule is linear and bounded") {
  EpsilonSchedule e{0.5, 0.4};
  CHECK(e.at(0, 101) == doctest::Approx(0.5));
  CHECK(e.at(50, 101) == doctest::Approx(0.45));
  CHECK(e.at(100, 101) == doctest::Approx(0.4));
  for (int k = -5; k < 120; ++k) {
    CHECK(e.at(k, 101) <= 0.5);
    CHECK(e.at(k, 101) >= 0.4);
  }
  CHECK(e.at(0, 1) == 0.5);
}

TEST_CASE("tabular update examples") {
  TabularLearner q(2, 2, {0.5, 0.9, {}, TabularRule::q_learning});
  q.update({0, 1, 1.0, 1, 0}, 0.0, true);
  CHECK(q.q(0, 1) == 0.5);

  // zero shaping equals the textbook rule written out by hand
  TabularLearner a(3, 2, {0.3, 0.8, {}, TabularRule::q_learning});
  a.set_q(1, 0, 0.4);
  a.set_q(1, 1, 0.7);
  a.set_q(0, 0, 0.1);
  a.update({0, 0, 0.25, 1, 0}, 0.0, false);
  CHECK(a.q(0, 0) == 0.1 + 0.3 * (0.25 + 0.8 * 0.7 - 0.1));

  TabularLearner s(3, 2, {0.3, 0.8, {}, TabularRule::sarsa});
  s.set_q(1, 0, 0.4);
  s.set_q(1, 1, 0.7);
  s.update({0, 0, 0.25, 1, 0}, 0.5, false, 0);
  CHECK(s.q(0, 0) == doctest::Approx(0.3 * (0.25 + 0.5 + 0.8 * 0.4)));
  CHECK_THROWS_AS(s.update({0, 0, 0.0, 1, 0}, 0.0, false, -1), ContractViolation);
}

TEST_CASE("greedy breaks ties toward the lowest index") {
  TabularLearner q(1, 4, {});
  CHECK(q.greedy(0) == 0);
  q.set_q(0, 2, 1.0);
  q.set_q(0, 3, 1.0);
  CHECK(q.greedy(0) == 2);
}

TEST_CASE("epsilon-greedy selection") {
  TabularLearner q(1, 4, {});
  q.set_q(0, 3, 1.0);
  std::mt19937_64 rng(42);
  for (int i = 0; i < 1000; ++i) CHECK(select_action_egreedy(q, 0, 0.0, rng) == 3);

  const int n = 10000;
  std::array<int, 4> counts{};
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(select_action_egreedy(q, 0, 1.0, rng))];
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  for (int c : counts) CHECK(std::abs(c - n / 4.0) < 3.0 * sigma);

  std::mt19937_64 r1(9), r2(9);
  for (int i = 0; i < 500; ++i)
    CHECK(select_action_egreedy(q, 0, 0.5, r1) == select_action_egreedy(q, 0, 0.5, r2));
  CHECK_THROWS_AS(select_action_egreedy(q, 0, 1.5, rng), ContractViolation);
}

TEST_CASE("q-learning converges to the value-iteration policy on a small grid") {
  env::GridworldScenario g;
  g.width = 4;
  g.height = 3;
  g.start = {0, 1};
  g.goal = {3, 1};
  g.subgoals = {{1, 1}};
  const auto m = env::to_mdp(g, 0.9);
  const auto oracle = mdp::greedy_policy(m, mdp::value_iteration(m).values);

  TabularLearner q(g.num_states(), env::kNumGridActions, {0.5, 0.9, {}, TabularRule::q_learning});
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> any_state(0, g.num_states() - 1);
  // exploring starts with a uniform behaviour policy
  for (int ep = 0; ep < 3000; ++ep) {
    int s = any_state(rng);
    if (s == g.index(g.goal)) continue;
    for (int t = 0; t < 50; ++t) {
      const int a = select_action_egreedy(q, s, 1.0, rng);
      const auto st = env::step_grid(g, s, a);
      q.update({s, a, st.reward, st.next, static_cast<std::size_t>(t)}, 0.0, st.terminal);
      if (st.terminal) break;
      s = st.next;
    }
  }
  for (int s = 0; s < g.num_states(); ++s) {
    if (m.is_terminal(s)) continue;
    const auto row = q.row(s);
    const double best = *std::max_element(row.begin(), row.end());
    std::vector<int> learned;
    for (int a = 0; a < 4; ++a)
      if (row[static_cast<std::size_t>(a)] >= best - 1e-6) learned.push_back(a);
    CHECK(learned == oracle[static_cast<std::size_t>(s)]);
  }
}
