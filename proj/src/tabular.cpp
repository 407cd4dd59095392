#include "dta/tabular.hpp"

#include <algorithm>

#include "dta/errors.hpp"
#include "dta/shaping.hpp"

namespace dta::learners {

double EpsilonSchedule::at(int episode, int budget) const {
  if (budget <= 1) return start;
  const double frac = std::clamp(static_cast<double>(episode) / (budget - 1), 0.0, 1.0);
  const double eps = start + (end - start) * frac;
  return std::clamp(eps, std::min(start, end), std::max(start, end));
}

TabularLearner::TabularLearner(int num_states, int num_actions, TabularConfig config)
    : num_states_(num_states),
      num_actions_(num_actions),
      config_(config),
      q_(static_cast<std::size_t>(num_states) * num_actions, 0.0) {
  if (num_states <= 0 || num_actions <= 0)
    throw ContractViolation("Q-table needs states and actions");
}

std::size_t TabularLearner::slot(int s, int a) const {
  if (s < 0 || s >= num_states_ || a < 0 || a >= num_actions_)
    throw ContractViolation("state/action index out of range");
  return static_cast<std::size_t>(s) * num_actions_ + a;
}

std::span<const double> TabularLearner::row(int s) const {
  return std::span<const double>(q_).subspan(slot(s, 0), static_cast<std::size_t>(num_actions_));
}

void TabularLearner::update(const TabularStep& step, double shaping, bool terminal,
                            int next_action) {
  double bootstrap = 0.0;
  if (!terminal) {
    if (config_.rule == TabularRule::sarsa) {
      bootstrap = q(step.next_state, next_action);
    } else {
      const auto next = row(step.next_state);
      bootstrap = *std::max_element(next.begin(), next.end());
    }
  }
  double& value = q_[slot(step.state, step.action)];
  const double target =
      shaping::shaped_td_target(step.reward, shaping, bootstrap, config_.gamma);
  value += config_.alpha * (target - value);
}

int TabularLearner::greedy(int s) const {
  const auto values = row(s);
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

int select_action_egreedy(const TabularLearner& learner, int s, double epsilon,
                          std::mt19937_64& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractViolation("epsilon must lie in [0, 1]");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, learner.num_actions() - 1);
    return pick(rng);
  }
  return learner.greedy(s);
}

}  // namespace dta::learners
