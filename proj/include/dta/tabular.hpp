#pragma once

#include <random>
#include <span>
#include <vector>

#include "dta/trajectory.hpp"

namespace dta::learners {

/// Linear epsilon schedule from `start` (first episode) to `end` (last episode).
struct EpsilonSchedule {
  double start = 0.5;
  double end = 0.4;

  double at(int episode, int budget) const;
};

enum class TabularRule { q_learning, sarsa };

struct TabularConfig {
  double alpha = 0.5;
  double gamma = 0.9;
  EpsilonSchedule epsilon{};
  TabularRule rule = TabularRule::q_learning;
};

using TabularStep = Step<int, int>;

/// Q-table over integer states and actions.
class TabularLearner {
 public:
  TabularLearner(int num_states, int num_actions, TabularConfig config);

  double q(int s, int a) const { return q_[slot(s, a)]; }
  void set_q(int s, int a, double v) { q_[slot(s, a)] = v; }
  std::span<const double> row(int s) const;

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  const TabularConfig& config() const { return config_; }
  const std::vector<double>& table() const { return q_; }

  /// Q(s,a) += alpha (r + shaping + gamma * bootstrap - Q(s,a)).
  /// Bootstrap is max_a' Q(s',a') for Q-learning, Q(s',next_action) for SARSA,
  /// and 0 when `terminal`.
  void update(const TabularStep& step, double shaping, bool terminal, int next_action = -1);

  /// Lowest-index argmax.
  int greedy(int s) const;

 private:
  std::size_t slot(int s, int a) const;

  int num_states_;
  int num_actions_;
  TabularConfig config_;
  std::vector<double> q_;
};

/// Free function form of TabularLearner::update.
inline void tabular_update(TabularLearner& learner, const TabularStep& step, double shaping,
                           bool terminal, int next_action = -1) {
  learner.update(step, shaping, terminal, next_action);
}

/// With probability epsilon a uniformly random action, otherwise the
/// lowest-index greedy action. Consumes exactly one uniform draw, plus one
/// index draw when exploring.
int select_action_egreedy(const TabularLearner& learner, int s, double epsilon,
                          std::mt19937_64& rng);

}  // namespace dta::learners
