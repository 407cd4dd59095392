#pragma once

#include <random>
#include <vector>

#include "dta/mdp.hpp"

namespace dta::testing {

/// Random small MDP: every (s, a) has 1-3 outcomes with Dirichlet-ish
/// probabilities and uniform rewards; the last state is terminal.
inline mdp::DiscreteMdp random_mdp(std::mt19937_64& rng, int max_states = 12, int max_actions = 4) {
  std::uniform_int_distribution<int> ns(3, max_states), na(2, max_actions), fan(1, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0), rew(-1.0, 1.0);
  const int n = ns(rng), m = na(rng);
  const double gamma = std::uniform_real_distribution<double>(0.5, 0.95)(rng);
  mdp::DiscreteMdp out(n, m, gamma);
  out.set_terminal(n - 1);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int s = 0; s + 1 < n; ++s) {
    for (int a = 0; a < m; ++a) {
      const int k = fan(rng);
      std::vector<double> w(static_cast<std::size_t>(k));
      double total = 0.0;
      for (auto& x : w) total += (x = 0.05 + u(rng));
      double used = 0.0;
      for (int i = 0; i < k; ++i) {
        // last outcome absorbs rounding so the row sums to exactly 1
        const double p = i + 1 < k ? w[static_cast<std::size_t>(i)] / total : 1.0 - used;
        used += p;
        out.add_transition(s, a, pick(rng), p, rew(rng));
      }
    }
  }
  return out;
}

/// Same dynamics with every reward r(s, a, s') replaced by r + gamma phi(s') - phi(s),
/// phi pinned to 0 on terminal states.
inline mdp::DiscreteMdp shaped_copy(const mdp::DiscreteMdp& base, const std::vector<double>& phi) {
  mdp::DiscreteMdp out(base.num_states(), base.num_actions(), base.discount());
  auto pot = [&](int s) { return base.is_terminal(s) ? 0.0 : phi[static_cast<std::size_t>(s)]; };
  for (int s = 0; s < base.num_states(); ++s)
    if (base.is_terminal(s)) out.set_terminal(s);
  for (int s = 0; s < base.num_states(); ++s) {
    if (base.is_terminal(s)) continue;
    for (int a = 0; a < base.num_actions(); ++a)
      for (const auto& o : base.outcomes(s, a))
        out.add_transition(s, a, o.next_state, o.probability,
                           o.reward + base.discount() * pot(o.next_state) - pot(s));
  }
  return out;
}

}  // namespace dta::testing
