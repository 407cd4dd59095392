#pragma once

#include <cstddef>
#include <vector>

#include "dta/errors.hpp"

namespace dta {

template <class State, class Action>
struct Step {
  State state{};
  Action action{};
  double reward = 0.0;
  State next_state{};
  std::size_t index = 0;
};

/// Ordered steps of one episode. `append` enforces consecutive indices and
/// that each step starts where the previous one ended.
template <class State, class Action>
class Trajectory {
 public:
  using StepType = Step<State, Action>;

  void append(StepType step) {
    if (!steps_.empty()) {
      const auto& last = steps_.back();
      if (step.index != last.index + 1)
        throw ContractViolation("trajectory step index must increase by 1");
      if (!(step.state == last.next_state))
        throw ContractViolation("trajectory steps do not chain");
    }
    steps_.push_back(std::move(step));
  }

  const std::vector<StepType>& steps() const { return steps_; }
  std::size_t size() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }

  bool terminal() const { return terminal_; }
  void set_terminal(bool terminal) { terminal_ = terminal; }

 private:
  std::vector<StepType> steps_;
  bool terminal_ = false;
};

}  // namespace dta
