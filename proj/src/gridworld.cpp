#include "dta/gridworld.hpp"

#include <algorithm>
#include <cmath>

#include "dta/errors.hpp"

namespace dta::env {

void GridworldScenario::validate() const {
  if (width <= 0 || height <= 0) throw ContractViolation("grid must be non-empty");
  if (max_steps <= 0) throw ContractViolation("max_steps must be positive");
  std::vector<Cell> special{start, goal};
  special.insert(special.end(), subgoals.begin(), subgoals.end());
  for (std::size_t i = 0; i < special.size(); ++i) {
    if (!in_bounds(special[i])) throw ContractViolation("special cell out of bounds");
    for (std::size_t j = 0; j < i; ++j)
      if (special[i] == special[j])
        throw ContractViolation("start, goal and subgoal cells must be distinct");
  }
}

GridStep step_grid(const GridworldScenario& scenario, int state, int action) {
  if (action < 0 || action >= kNumGridActions) throw ContractViolation("invalid grid action");
  if (state < 0 || state >= scenario.num_states()) throw ContractViolation("invalid grid state");
  Cell c = scenario.cell(state);
  switch (static_cast<GridAction>(action)) {
    case GridAction::up: c.y += 1; break;
    case GridAction::down: c.y -= 1; break;
    case GridAction::left: c.x -= 1; break;
    case GridAction::right: c.x += 1; break;
  }
  c.x = std::clamp(c.x, 0, scenario.width - 1);
  c.y = std::clamp(c.y, 0, scenario.height - 1);

  GridStep out;
  out.next = scenario.index(c);
  out.terminal = c == scenario.goal;
  out.reward = out.terminal ? scenario.goal_reward : scenario.step_reward;
  for (std::size_t i = 0; i < scenario.subgoals.size(); ++i)
    if (scenario.subgoals[i] == c) out.subgoal = static_cast<int>(i);
  return out;
}

mdp::DiscreteMdp to_mdp(const GridworldScenario& scenario, double gamma) {
  scenario.validate();
  mdp::DiscreteMdp m(scenario.num_states(), kNumGridActions, gamma);
  const int goal = scenario.index(scenario.goal);
  m.set_terminal(goal);
  for (int s = 0; s < scenario.num_states(); ++s) {
    if (s == goal) continue;
    for (int a = 0; a < kNumGridActions; ++a) {
      const GridStep step = step_grid(scenario, s, a);
      m.add_transition(s, a, step.next, 1.0, step.reward);
    }
  }
  m.validate();
  return m;
}

std::vector<shaping::Predicate<int>> grid_subgoal_predicates(const GridworldScenario& scenario) {
  std::vector<shaping::Predicate<int>> out;
  for (Cell c : scenario.subgoals) {
    const int target = scenario.index(c);
    out.emplace_back([target](const int& s) { return s == target; });
  }
  return out;
}

GridworldScenario parse_gridworld(const KeyValueFile& file) {
  GridworldScenario g;
  g.width = file.get_int("width", g.width);
  g.height = file.get_int("height", g.height);
  auto as_cell = [&](const KeyValueFile::Entry& e, std::pair<double, double> p) {
    if (p.first != std::floor(p.first) || p.second != std::floor(p.second))
      file.fail(e, "cell coordinates must be integers");
    return Cell{static_cast<int>(p.first), static_cast<int>(p.second)};
  };
  for (const char* key : {"start", "goal"}) {
    const auto entries = file.all(key);
    if (entries.empty()) continue;
    const auto p = parse_pair(entries.back().value);
    if (!p) file.fail(entries.back(), "expected 'x,y'");
    (std::string(key) == "start" ? g.start : g.goal) = as_cell(entries.back(), *p);
  }
  const auto subgoals = file.all("subgoal");
  if (!subgoals.empty()) {
    g.subgoals.clear();
    for (const auto& e : subgoals) {
      const auto p = parse_pair(e.value);
      if (!p) file.fail(e, "expected 'x,y'");
      g.subgoals.push_back(as_cell(e, *p));
    }
  }
  g.step_reward = file.get_double("step_reward", g.step_reward);
  g.goal_reward = file.get_double("goal_reward", g.goal_reward);
  g.max_steps = file.get_int("max_steps", g.max_steps);
  try {
    g.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(file.source(), 0, e.what());
  }
  return g;
}

}  // namespace dta::env
