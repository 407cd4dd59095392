#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dta/errors.hpp"
#include "dta/gridworld.hpp"

using namespace dta;
using namespace dta::env;

TEST_CASE("walls clamp and the goal terminates") {
  GridworldScenario g;
  const int corner = g.index({0, 0});
  CHECK(step_grid(g, corner, static_cast<int>(GridAction::left)).next == corner);
  CHECK(step_grid(g, corner, static_cast<int>(GridAction::down)).next == corner);
  const auto into_goal = step_grid(g, g.index({5, 3}), static_cast<int>(GridAction::right));
  CHECK(into_goal.terminal);
  CHECK(into_goal.reward == 1.0);
  const auto plain = step_grid(g, g.index({1, 1}), static_cast<int>(GridAction::up));
  CHECK_FALSE(plain.terminal);
  CHECK(plain.reward == 0.0);
  CHECK(step_grid(g, g.index({2, 3}), static_cast<int>(GridAction::right)).subgoal == 0);
  CHECK_THROWS_AS(step_grid(g, 0, 4), ContractViolation);
}

TEST_CASE("greedy rollout return equals the oracle value") {
  GridworldScenario g;
  const auto m = to_mdp(g, 0.9);
  const auto v = mdp::value_iteration(m).values;
  const auto pi = mdp::greedy_policy(m, v);
  for (int s0 = 0; s0 < g.num_states(); ++s0) {
    if (m.is_terminal(s0)) continue;
    int s = s0;
    double ret = 0.0, disc = 1.0;
    for (int t = 0; t < 100; ++t) {
      const auto st = step_grid(g, s, pi[static_cast<std::size_t>(s)].front());
      ret += disc * st.reward;
      disc *= 0.9;
      if (st.terminal) break;
      s = st.next;
    }
    CHECK(ret == doctest::Approx(v[static_cast<std::size_t>(s0)]).epsilon(1e-9));
  }
}

TEST_CASE("mdp round-trip agrees with step_grid") {
  GridworldScenario g;
  g.width = 5;
  g.height = 4;
  g.start = {0, 0};
  g.goal = {4, 3};
  g.subgoals = {{2, 1}, {3, 2}};
  const auto m = to_mdp(g, 0.95);
  for (int s = 0; s < g.num_states(); ++s) {
    if (m.is_terminal(s)) continue;
    for (int a = 0; a < 4; ++a) {
      const auto st = step_grid(g, s, a);
      REQUIRE(m.outcomes(s, a).size() == 1);
      CHECK(m.outcomes(s, a)[0].next_state == st.next);
      CHECK(m.outcomes(s, a)[0].reward == st.reward);
    }
  }
  const auto preds = grid_subgoal_predicates(g);
  REQUIRE(preds.size() == 2);
  CHECK(preds[0](g.index({2, 1})));
  CHECK_FALSE(preds[0](g.index({3, 2})));
  CHECK(preds[1](g.index({3, 2})));
}

TEST_CASE("scenario validation and parsing") {
  GridworldScenario g;
  g.subgoals = {g.goal};
  CHECK_THROWS_AS(g.validate(), ContractViolation);
  g.subgoals = {{9, 9}};
  CHECK_THROWS_AS(g.validate(), ContractViolation);

  std::istringstream text("width = 5\nheight = 3\nstart = 0,1\ngoal = 4,1\nsubgoal = 2,1\nsubgoal = 3,1\n");
  const auto parsed = parse_gridworld(KeyValueFile::parse(text, "grid"));
  CHECK(parsed.width == 5);
  CHECK(parsed.subgoals.size() == 2);
  CHECK(parsed.subgoals[1] == Cell{3, 1});

  std::istringstream frac("start = 0.5,1\n");
  try {
    parse_gridworld(KeyValueFile::parse(frac, "grid"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 1);
  }
  std::istringstream clash("start = 6,3\n");
  CHECK_THROWS_AS(parse_gridworld(KeyValueFile::parse(clash, "grid")), ConfigError);
}
