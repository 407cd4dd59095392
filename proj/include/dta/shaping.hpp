#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace dta::shaping {

/// F(s, s') = gamma * phi(s') - phi(s).
inline double pbrs_reward(double phi_s, double phi_s_next, double gamma) {
  return gamma * phi_s_next - phi_s;
}

/// r + f + gamma * bootstrap. Pass bootstrap = 0 on terminal transitions.
inline double shaped_td_target(double r, double f, double bootstrap, double gamma) {
  return r + f + gamma * bootstrap;
}

template <class State>
using Predicate = std::function<bool(const State&)>;

/// Naive subgoal potential: eta on any subgoal-satisfying state, else 0.
template <class State>
double nrs_potential(const State& state, const std::vector<Predicate<State>>& subgoals,
                     double eta) {
  for (const auto& holds : subgoals)
    if (holds(state)) return eta;
  return 0.0;
}

/// State potential. Absorbing states always evaluate to 0, so callers pass
/// whether the state is terminal.
template <class State>
class Potential {
 public:
  Potential(std::function<double(const State&)> fn, bool time_varying = false)
      : fn_(std::move(fn)), time_varying_(time_varying) {}

  double operator()(const State& s, bool terminal = false) const {
    return terminal ? 0.0 : fn_(s);
  }
  bool time_varying() const { return time_varying_; }

 private:
  std::function<double(const State&)> fn_;
  bool time_varying_ = false;
};

/// Per-episode shaping hook consumed by the learners.
///
/// `on_transition` is called once per environment step with the post-step
/// state and returns F for that step; it may update internal state (learned
/// potentials). `preview` returns the F a hypothetical transition would
/// receive, without side effects.
template <class State>
class Shaper {
 public:
  virtual ~Shaper() = default;

  virtual void begin_episode(const State& start) = 0;
  virtual double on_transition(const State& next, double reward, bool goal,
                               bool terminal) = 0;
  virtual double preview(const State& next, bool goal, bool terminal) const = 0;
  /// Abstract-state index for logging; 0 when the shaper has none.
  virtual int abstract_state() const { return 0; }
};

template <class State>
class NoShaping final : public Shaper<State> {
 public:
  void begin_episode(const State&) override {}
  double on_transition(const State&, double, bool, bool) override { return 0.0; }
  double preview(const State&, bool, bool) const override { return 0.0; }
};

/// PBRS with a fixed potential (used for NRS).
template <class State>
class StaticPotentialShaper final : public Shaper<State> {
 public:
  StaticPotentialShaper(Potential<State> potential, double gamma)
      : potential_(std::move(potential)), gamma_(gamma) {}

  void begin_episode(const State& start) override { phi_current_ = potential_(start); }

  double on_transition(const State& next, double, bool, bool terminal) override {
    const double phi_next = potential_(next, terminal);
    const double f = pbrs_reward(phi_current_, phi_next, gamma_);
    phi_current_ = phi_next;
    return f;
  }

  double preview(const State& next, bool, bool terminal) const override {
    return pbrs_reward(phi_current_, potential_(next, terminal), gamma_);
  }

 private:
  Potential<State> potential_;
  double gamma_;
  double phi_current_ = 0.0;
};

}  // namespace dta::shaping
