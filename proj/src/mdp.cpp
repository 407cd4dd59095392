#include "dta/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "dta/errors.hpp"

namespace dta::mdp {

DiscreteMdp::DiscreteMdp(int num_states, int num_actions, double discount)
    : num_states_(num_states),
      num_actions_(num_actions),
      discount_(discount),
      transitions_(static_cast<std::size_t>(num_states) * num_actions),
      terminal_(static_cast<std::size_t>(num_states), false) {
  if (num_states <= 0 || num_actions <= 0)
    throw ContractViolation("MDP needs at least one state and one action");
  if (!(discount > 0.0 && discount <= 1.0))
    throw ContractViolation("discount must lie in (0, 1]");
}

std::size_t DiscreteMdp::slot(int s, int a) const {
  if (s < 0 || s >= num_states_ || a < 0 || a >= num_actions_)
    throw ContractViolation("state/action index out of range");
  return static_cast<std::size_t>(s) * num_actions_ + a;
}

void DiscreteMdp::add_transition(int s, int a, int next, double probability,
                                 double reward) {
  if (next < 0 || next >= num_states_)
    throw ContractViolation("next-state index out of range");
  if (terminal_[static_cast<std::size_t>(s)])
    throw ContractViolation("terminal states cannot get transitions");
  transitions_[slot(s, a)].push_back({next, probability, reward});
}

void DiscreteMdp::set_terminal(int s) {
  for (int a = 0; a < num_actions_; ++a) transitions_[slot(s, a)] = {{s, 1.0, 0.0}};
  terminal_[static_cast<std::size_t>(s)] = true;
}

const std::vector<Outcome>& DiscreteMdp::outcomes(int s, int a) const {
  return transitions_[slot(s, a)];
}

void DiscreteMdp::validate() const {
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < num_actions_; ++a) {
      const auto& out = outcomes(s, a);
      double total = 0.0;
      for (const auto& o : out) {
        if (o.probability < 0.0)
          throw ContractViolation("negative transition probability");
        total += o.probability;
        if (is_terminal(s) && (o.next_state != s || o.reward != 0.0))
          throw ContractViolation("terminal state " + std::to_string(s) +
                                  " must self-loop with reward 0");
      }
      if (std::abs(total - 1.0) > 1e-9)
        throw ContractViolation("transition distribution of (" + std::to_string(s) +
                                ", " + std::to_string(a) + ") sums to " +
                                std::to_string(total));
    }
  }
}

double DiscreteMdp::q_backup(int s, int a, const std::vector<double>& values) const {
  double q = 0.0;
  for (const auto& o : outcomes(s, a))
    q += o.probability * (o.reward + discount_ * values[static_cast<std::size_t>(o.next_state)]);
  return q;
}

ValueIterationResult value_iteration(const DiscreteMdp& mdp,
                                     const ValueIterationOptions& options) {
  if (!(options.tolerance > 0.0)) throw ContractViolation("tolerance must be positive");

  const auto n = static_cast<std::size_t>(mdp.num_states());
  ValueIterationResult result;
  result.values.assign(n, 0.0);
  Values next(n, 0.0);

  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double residual = 0.0;
    for (int s = 0; s < mdp.num_states(); ++s) {
      const auto i = static_cast<std::size_t>(s);
      if (mdp.is_terminal(s)) {
        next[i] = 0.0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < mdp.num_actions(); ++a)
        best = std::max(best, mdp.q_backup(s, a, result.values));
      next[i] = best;
      residual = std::max(residual, std::abs(best - result.values[i]));
    }
    result.values.swap(next);
    result.sweeps = sweep + 1;
    result.residuals.push_back(residual);
    if (residual < options.tolerance) return result;
  }
  throw OracleFailure("value iteration did not converge within " +
                      std::to_string(options.max_sweeps) + " sweeps");
}

ActionSets greedy_policy(const DiscreteMdp& mdp, const Values& values,
                         double tie_tolerance) {
  ActionSets sets(static_cast<std::size_t>(mdp.num_states()));
  std::vector<double> q(static_cast<std::size_t>(mdp.num_actions()));
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    for (int a = 0; a < mdp.num_actions(); ++a) q[static_cast<std::size_t>(a)] = mdp.q_backup(s, a, values);
    const double best = *std::max_element(q.begin(), q.end());
    for (int a = 0; a < mdp.num_actions(); ++a)
      if (q[static_cast<std::size_t>(a)] >= best - tie_tolerance)
        sets[static_cast<std::size_t>(s)].push_back(a);
  }
  return sets;
}

namespace {

template <class T>
T read_field(std::istringstream& fields, const std::string& source, int line,
             const char* what) {
  T value{};
  if (!(fields >> value))
    throw ConfigError(source, line, std::string("expected ") + what);
  return value;
}

}  // namespace

DiscreteMdp parse_mdp(std::istream& in, const std::string& source) {
  int states = -1;
  int actions = -1;
  double discount = -1.0;
  std::vector<int> terminals;
  struct Pending {
    int line;
    int s, a, next;
    double p, r;
  };
  std::vector<Pending> pending;

  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    std::istringstream fields(raw);
    std::string keyword;
    if (!(fields >> keyword)) continue;

    if (keyword == "states") {
      states = read_field<int>(fields, source, line, "state count");
    } else if (keyword == "actions") {
      actions = read_field<int>(fields, source, line, "action count");
    } else if (keyword == "discount") {
      discount = read_field<double>(fields, source, line, "discount");
    } else if (keyword == "terminal") {
      int s = 0;
      while (fields >> s) terminals.push_back(s);
      if (!fields.eof()) throw ConfigError(source, line, "bad terminal state list");
    } else if (keyword == "t") {
      if (states < 0 || actions < 0 || discount < 0.0)
        throw ConfigError(source, line, "states/actions/discount must come before transitions");
      Pending t{line, 0, 0, 0, 0.0, 0.0};
      t.s = read_field<int>(fields, source, line, "source state");
      t.a = read_field<int>(fields, source, line, "action");
      t.next = read_field<int>(fields, source, line, "next state");
      t.p = read_field<double>(fields, source, line, "probability");
      t.r = read_field<double>(fields, source, line, "reward");
      pending.push_back(t);
    } else {
      throw ConfigError(source, line, "unknown directive '" + keyword + "'");
    }
    std::string extra;
    if (keyword != "terminal" && fields >> extra)
      throw ConfigError(source, line, "trailing token '" + extra + "'");
  }

  if (states <= 0 || actions <= 0) throw ConfigError(source, 0, "missing states/actions");
  if (!(discount > 0.0 && discount <= 1.0))
    throw ConfigError(source, 0, "discount must lie in (0, 1]");

  DiscreteMdp mdp(states, actions, discount);
  for (int s : terminals) {
    if (s < 0 || s >= states) throw ConfigError(source, 0, "terminal state out of range");
    mdp.set_terminal(s);
  }
  for (const auto& t : pending) {
    try {
      mdp.add_transition(t.s, t.a, t.next, t.p, t.r);
    } catch (const ContractViolation& e) {
      throw ConfigError(source, t.line, e.what());
    }
  }
  try {
    mdp.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(source, 0, e.what());
  }
  return mdp;
}

DiscreteMdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open file");
  return parse_mdp(in, path);
}

}  // namespace dta::mdp
