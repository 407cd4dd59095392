#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace dta::mdp {

struct Outcome {
  int next_state = 0;
  double probability = 0.0;
  double reward = 0.0;
};

/// Finite MDP with sparse transitions. Rewards are attached to (s, a, s').
///
/// Terminal states are absorbing: they self-loop with reward 0 under every
/// action. `set_terminal` installs those loops; `validate` checks them.
class DiscreteMdp {
 public:
  DiscreteMdp() = default;
  DiscreteMdp(int num_states, int num_actions, double discount);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  double discount() const { return discount_; }

  /// Appends an outcome to (s, a). Repeated s' entries are allowed and summed
  /// by the backup.
  void add_transition(int s, int a, int next, double probability, double reward);
  void set_terminal(int s);

  bool is_terminal(int s) const { return terminal_[static_cast<std::size_t>(s)]; }
  const std::vector<Outcome>& outcomes(int s, int a) const;

  /// Throws ContractViolation if a distribution does not sum to 1 within 1e-9,
  /// an index is out of range, or a terminal state leaks.
  void validate() const;

  /// Expected one-step backup sum_{s'} p (r + discount * values[s']).
  double q_backup(int s, int a, const std::vector<double>& values) const;

 private:
  std::size_t slot(int s, int a) const;

  int num_states_ = 0;
  int num_actions_ = 0;
  double discount_ = 1.0;
  std::vector<std::vector<Outcome>> transitions_;
  std::vector<bool> terminal_;
};

using Values = std::vector<double>;
using ActionSets = std::vector<std::vector<int>>;

struct ValueIterationOptions {
  double tolerance = 1e-8;
  int max_sweeps = 100000;
};

struct ValueIterationResult {
  Values values;
  int sweeps = 0;
  /// Max-norm Bellman residual after each sweep.
  std::vector<double> residuals;
};

/// Synchronous value iteration. Terminal states are pinned at 0.
/// Throws OracleFailure when the sweep cap is reached first.
ValueIterationResult value_iteration(const DiscreteMdp& mdp,
                                     const ValueIterationOptions& options = {});

/// All actions whose Q-backup is within `tie_tolerance` of the best one.
/// Terminal states get an empty set.
ActionSets greedy_policy(const DiscreteMdp& mdp, const Values& values,
                         double tie_tolerance = 1e-9);

/// Text fixture format (one directive per line, `#` starts a comment):
///
///     states <n>
///     actions <m>
///     discount <gamma>
///     terminal <s> [<s> ...]
///     t <s> <a> <s'> <probability> <reward>
///
/// `states`, `actions` and `discount` must precede the first `t` line.
/// Throws ConfigError with the offending line number.
DiscreteMdp parse_mdp(std::istream& in, const std::string& source = "<mdp>");
DiscreteMdp load_mdp(const std::string& path);

}  // namespace dta::mdp
