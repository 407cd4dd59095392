#pragma once

#include <string>
#include <vector>

#include "dta/config.hpp"
#include "dta/mdp.hpp"
#include "dta/shaping.hpp"

namespace dta::env {

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(Cell, Cell) = default;
};

enum class GridAction : int { up = 0, down = 1, left = 2, right = 3 };
inline constexpr int kNumGridActions = 4;

/// Open rectangular grid; moves into the border leave the agent in place.
struct GridworldScenario {
  int width = 7;
  int height = 7;
  Cell start{0, 3};
  Cell goal{6, 3};
  std::vector<Cell> subgoals{{3, 3}};
  double step_reward = 0.0;
  double goal_reward = 1.0;
  int max_steps = 100;

  /// Throws ContractViolation unless start, goal and subgoals are distinct
  /// in-bounds cells.
  void validate() const;

  int num_states() const { return width * height; }
  int index(Cell c) const { return c.y * width + c.x; }
  Cell cell(int index) const { return {index % width, index / width}; }
  bool in_bounds(Cell c) const { return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height; }
};

struct GridStep {
  int next = 0;
  double reward = 0.0;
  bool terminal = false;
  /// Index into `subgoals` of the cell entered, or -1.
  int subgoal = -1;
};

GridStep step_grid(const GridworldScenario& scenario, int state, int action);

/// Exact MDP with the goal absorbing; `gamma` becomes the MDP discount.
mdp::DiscreteMdp to_mdp(const GridworldScenario& scenario, double gamma);

/// One "agent is on subgoal cell i" predicate per subgoal, in series order.
std::vector<shaping::Predicate<int>> grid_subgoal_predicates(const GridworldScenario& scenario);

/// Reads width/height/start/goal/subgoal/step_reward/goal_reward/max_steps.
GridworldScenario parse_gridworld(const KeyValueFile& file);

}  // namespace dta::env
