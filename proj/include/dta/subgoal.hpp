#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "dta/errors.hpp"
#include "dta/shaping.hpp"

namespace dta::subgoal {

using shaping::Predicate;

enum class Ordering { total, partial };

/// Number of subgoals achieved so far in the current episode.
struct AbstractState {
  int index = 0;
  friend bool operator==(AbstractState, AbstractState) = default;
};

/// Ordered subgoal predicates (SG, <).
///
/// A total order is the chain sg_0 < sg_1 < ... < sg_{n-1}. A partial order is
/// given as the set of admissible first subgoals plus, for every subgoal, the
/// set of subgoals admissible right after it.
template <class State>
class SubgoalSeries {
 public:
  explicit SubgoalSeries(std::vector<Predicate<State>> subgoals)
      : subgoals_(std::move(subgoals)), ordering_(Ordering::total) {
    if (subgoals_.empty()) throw ContractViolation("subgoal series must be non-empty");
    roots_ = {0};
    successors_.resize(subgoals_.size());
    for (std::size_t i = 0; i + 1 < subgoals_.size(); ++i)
      successors_[i] = {static_cast<int>(i + 1)};
  }

  SubgoalSeries(std::vector<Predicate<State>> subgoals, std::vector<int> roots,
                std::vector<std::vector<int>> successors)
      : subgoals_(std::move(subgoals)),
        ordering_(Ordering::partial),
        roots_(std::move(roots)),
        successors_(std::move(successors)) {
    if (subgoals_.empty()) throw ContractViolation("subgoal series must be non-empty");
    if (successors_.size() != subgoals_.size())
      throw ContractViolation("one successor list per subgoal required");
    auto check = [&](int i) {
      if (i < 0 || i >= size()) throw ContractViolation("successor index out of range");
    };
    for (int r : roots_) check(r);
    for (const auto& next : successors_)
      for (int i : next) check(i);
  }

  int size() const { return static_cast<int>(subgoals_.size()); }
  /// n subgoals give n + 1 abstract states.
  int num_abstract_states() const { return size() + 1; }
  Ordering ordering() const { return ordering_; }

  bool holds(int subgoal, const State& s) const {
    return subgoals_.at(static_cast<std::size_t>(subgoal))(s);
  }

  /// Subgoals that may be achieved next after `last` (-1 before any).
  const std::vector<int>& admissible_after(int last) const {
    return last < 0 ? roots_ : successors_.at(static_cast<std::size_t>(last));
  }

  const std::vector<Predicate<State>>& predicates() const { return subgoals_; }

 private:
  std::vector<Predicate<State>> subgoals_;
  Ordering ordering_;
  std::vector<int> roots_;
  std::vector<std::vector<int>> successors_;
};

/// Maps an achievement count to its abstract state.
inline AbstractState filter(int achievement_index, int num_subgoals) {
  if (achievement_index < 0 || achievement_index > num_subgoals)
    throw ContractViolation("achievement index out of range");
  return AbstractState{achievement_index};
}

/// Total-order test: does `state` satisfy the next unachieved subgoal?
/// Only sg_{current_index} is examined.
template <class State>
bool check_advance(const State& state, const SubgoalSeries<State>& series,
                   int current_index) {
  if (current_index < 0 || current_index >= series.size())
    throw ContractViolation("no unachieved subgoal left to test");
  return series.holds(current_index, state);
}

/// Achievement cursor for one episode; works for both orderings.
template <class State>
class SubgoalTracker {
 public:
  explicit SubgoalTracker(const SubgoalSeries<State>& series) : series_(&series) {}

  void reset() {
    last_ = -1;
    achieved_ = 0;
  }

  /// Subgoal that `state` would achieve next, if any. Does not advance.
  std::optional<int> probe(const State& state) const {
    if (achieved_ >= series_->size()) return std::nullopt;
    if (series_->ordering() == Ordering::total) {
      if (check_advance(state, *series_, achieved_)) return achieved_;
      return std::nullopt;
    }
    for (int candidate : series_->admissible_after(last_))
      if (series_->holds(candidate, state)) return candidate;
    return std::nullopt;
  }

  void advance(int subgoal) {
    last_ = subgoal;
    ++achieved_;
  }

  int achieved() const { return achieved_; }
  AbstractState abstract_state() const { return filter(achieved_, series_->size()); }

 private:
  const SubgoalSeries<State>* series_;
  int last_ = -1;
  int achieved_ = 0;
};

/// Discounted reward accumulated since the last abstract-state transition.
struct RewardAccumulator {
  double r_h = 0.0;
  int t = 0;
};

/// r_h + gamma^t r, then t + 1.
inline RewardAccumulator accumulate(RewardAccumulator acc, double r, double gamma) {
  acc.r_h += std::pow(gamma, acc.t) * r;
  acc.t += 1;
  return acc;
}

/// Tabular value function over abstract states, the learned potential.
class AbstractValueFunction {
 public:
  AbstractValueFunction(int num_abstract_states, double alpha, double gamma)
      : values_(static_cast<std::size_t>(num_abstract_states), 0.0),
        alpha_(alpha),
        gamma_(gamma) {
    if (num_abstract_states < 2)
      throw ContractViolation("need at least one subgoal (two abstract states)");
  }

  double operator()(AbstractState z) const { return values_.at(idx(z)); }
  void set(AbstractState z, double v) { values_.at(idx(z)) = v; }

  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  int size() const { return static_cast<int>(values_.size()); }
  const std::vector<double>& values() const { return values_; }

  void nudge(AbstractState z, double delta) { values_.at(idx(z)) += alpha_ * delta; }

 private:
  static std::size_t idx(AbstractState z) {
    if (z.index < 0) throw ContractViolation("negative abstract state");
    return static_cast<std::size_t>(z.index);
  }

  std::vector<double> values_;
  double alpha_;
  double gamma_;
};

/// Multi-step TD update of V(z) at a subgoal or goal event; returns delta.
///
/// Subgoal: delta = r_h + gamma_v^k V(z') - V(z).
/// Goal:    delta = r_h + gamma_v^k r - V(z), with r the final reward.
inline double update_on_subgoal(AbstractValueFunction& v, AbstractState z,
                                AbstractState z_next, double r_h, int k, bool is_goal,
                                double goal_reward = 0.0) {
  if (k < 1) throw ContractViolation("segment duration k must be >= 1");
  if (!is_goal && z_next.index != z.index + 1)
    throw ContractViolation("update_on_subgoal called outside a subgoal event");
  const double discount = std::pow(v.gamma(), k);
  const double target = is_goal ? r_h + discount * goal_reward : r_h + discount * v(z_next);
  const double delta = target - v(z);
  v.nudge(z, delta);
  return delta;
}

/// gamma V(z') - V(z). Nonzero on self-transitions whenever gamma < 1.
inline double dta_shaping_reward(const AbstractValueFunction& v, AbstractState z,
                                 AbstractState z_next, double gamma) {
  return shaping::pbrs_reward(v(z), v(z_next), gamma);
}

/// SARSA-RS with subgoal-based dynamic trajectory aggregation, one step at a
/// time. Owns the abstract value function, which persists across episodes.
///
/// Per step, in order: detect subgoal/goal events on the post-step state;
/// on an event, update V(z) from the accumulator and reset it; accumulate the
/// step reward; return F = gamma V(z') - V(z) with z' the filtered next state.
/// The goal is not a subgoal, so a terminal step keeps z' = z and yields
/// (gamma - 1) V(z); no zero potential is substituted at the absorbing state.
///
/// Every episode starts with a zero reward already accumulated, so the first
/// segment's duration counts the transition into its first state, the same
/// as every later segment.
template <class State>
class DtaShaper final : public shaping::Shaper<State> {
 public:
  DtaShaper(SubgoalSeries<State> series, double gamma, double alpha_v, double gamma_v)
      : series_(std::move(series)),
        tracker_(series_),
        values_(series_.num_abstract_states(), alpha_v, gamma_v),
        gamma_(gamma) {}

  DtaShaper(const DtaShaper&) = delete;
  DtaShaper& operator=(const DtaShaper&) = delete;

  void begin_episode(const State&) override {
    tracker_.reset();
    acc_ = accumulate(RewardAccumulator{}, 0.0, values_.gamma());
  }

  double on_transition(const State& next, double reward, bool goal, bool) override {
    const AbstractState z = tracker_.abstract_state();
    std::optional<int> achieved;
    if (!goal) achieved = tracker_.probe(next);
    if (achieved) tracker_.advance(*achieved);
    const AbstractState z_next = tracker_.abstract_state();

    if (achieved || goal) {
      if (learning_)
        last_delta_ = update_on_subgoal(values_, z, z_next, acc_.r_h, acc_.t, goal, reward);
      acc_ = RewardAccumulator{};
    }
    acc_ = accumulate(acc_, reward, values_.gamma());
    return dta_shaping_reward(values_, z, z_next, gamma_);
  }

  double preview(const State& next, bool goal, bool) const override {
    const AbstractState z = tracker_.abstract_state();
    const AbstractState z_next{!goal && tracker_.probe(next) ? z.index + 1 : z.index};
    return dta_shaping_reward(values_, z, z_next, gamma_);
  }

  int abstract_state() const override { return tracker_.achieved(); }

  /// With learning off the potential is frozen; tracking continues.
  void set_learning(bool on) { learning_ = on; }

  const AbstractValueFunction& values() const { return values_; }
  AbstractValueFunction& values() { return values_; }
  const RewardAccumulator& accumulator() const { return acc_; }
  const SubgoalSeries<State>& series() const { return series_; }
  double last_delta() const { return last_delta_; }

 private:
  SubgoalSeries<State> series_;
  SubgoalTracker<State> tracker_;
  AbstractValueFunction values_;
  double gamma_;
  RewardAccumulator acc_{};
  double last_delta_ = 0.0;
  bool learning_ = true;
};

}  // namespace dta::subgoal
