#include "dta/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <tuple>
#include <cmath>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

#include "dta/errors.hpp"
#include "dta/subgoal.hpp"

namespace dta::harness {

using learners::Features;
using learners::ValueNetwork;

Method parse_method(const std::string& name) {
  if (name == "dta") return Method::dta;
  if (name == "nrs") return Method::nrs;
  if (name == "base-cadrl") return Method::base_cadrl;
  if (name == "q-learn") return Method::q_learn;
  if (name == "sarsa") return Method::sarsa;
  throw ConfigError("", 0, "unknown method '" + name + "'");
}

const char* to_string(Method method) {
  switch (method) {
    case Method::dta: return "dta";
    case Method::nrs: return "nrs";
    case Method::base_cadrl: return "base-cadrl";
    case Method::q_learn: return "q-learn";
    case Method::sarsa: return "sarsa";
  }
  return "?";
}

Scenario parse_scenario(const KeyValueFile& file) {
  Scenario s;
  s.name = file.get_string("name", file.source());
  const std::string type = file.require_string("type");
  if (type == "gridworld") {
    s.spec = env::parse_gridworld(file);
  } else if (type == "social") {
    s.spec = env::parse_social_nav(file);
  } else {
    for (const auto& e : file.all("type")) file.fail(e, "expected 'gridworld' or 'social'");
  }
  file.reject_unused();
  return s;
}

Scenario load_scenario(const std::string& path) { return parse_scenario(KeyValueFile::load(path)); }

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("", 0, "at least one seed is required");
  if (episodes <= 0) throw ConfigError("", 0, "episode budget must be positive");
  if (eval_episodes < 0) throw ConfigError("", 0, "evaluation episodes must be >= 0");
  const bool tabular_only = method == Method::q_learn || method == Method::sarsa;
  if (tabular_only && !scenario.is_grid())
    throw ConfigError("", 0, std::string(to_string(method)) + " needs a gridworld scenario");
  if (method == Method::base_cadrl && scenario.is_grid())
    throw ConfigError("", 0, "base-cadrl needs a social scenario");
  if (method == Method::dta) {
    const bool none = scenario.is_grid() ? scenario.grid().subgoals.empty()
                                         : scenario.social().subgoals.empty();
    if (none) throw ConfigError("", 0, "dta needs at least one subgoal in the scenario");
  }
  if (!(hp.gamma > 0.0 && hp.gamma <= 1.0)) throw ConfigError("", 0, "gamma must lie in (0, 1]");
  if (hp.epsilon.start < 0.0 || hp.epsilon.start > 1.0 || hp.epsilon.end < 0.0 ||
      hp.epsilon.end > 1.0)
    throw ConfigError("", 0, "epsilon schedule must lie in [0, 1]");
  if (hp.batch_size <= 0 || hp.replay_capacity <= 0)
    throw ConfigError("", 0, "batch size and replay capacity must be positive");
  for (int h : hp.hidden)
    if (h <= 0) throw ConfigError("", 0, "hidden layer sizes must be positive");
  if (!(hp.net_learning_rate > 0.0)) throw ConfigError("", 0, "network learning rate must be positive");
  if (hp.momentum < 0.0 || hp.momentum >= 1.0) throw ConfigError("", 0, "momentum must lie in [0, 1)");
  if (hp.updates_per_step < 0 || hp.target_update_episodes <= 0)
    throw ConfigError("", 0, "updates per step must be >= 0 and target sync interval positive");
  if (hp.demo_noise < 0.0 || hp.demo_noise > 1.0) throw ConfigError("", 0, "demo noise must lie in [0, 1]");
}

Aggregate Aggregate::of(std::span<const EpisodeMetrics> episodes) {
  Aggregate a;
  a.episodes = static_cast<int>(episodes.size());
  if (episodes.empty()) return a;
  int success = 0;
  int collision = 0;
  double nav = 0.0;
  double reward = 0.0;
  for (const auto& e : episodes) {
    success += e.success ? 1 : 0;
    collision += e.collision ? 1 : 0;
    nav += e.nav_time;
    reward += e.total_reward;
  }
  const double n = static_cast<double>(episodes.size());
  a.success_rate = success / n;
  a.collision_rate = collision / n;
  a.timeout_rate = (n - success - collision) / n;
  a.mean_nav_time = nav / n;
  a.mean_total_reward = reward / n;
  return a;
}

double learner_discount(const Scenario& scenario, const Hyperparameters& hp) {
  if (scenario.is_grid()) return hp.gamma;
  const auto& s = scenario.social();
  return learners::step_discount(hp.gamma, s.dt, s.robot_v_pref);
}

namespace {

template <class State>
std::unique_ptr<shaping::Shaper<State>> make_shaper(Method method,
                                                   std::vector<shaping::Predicate<State>> subgoals,
                                                   double discount, const Hyperparameters& hp) {
  switch (method) {
    case Method::dta: {
      const double gamma_v = hp.gamma_v.value_or(discount);
      return std::make_unique<subgoal::DtaShaper<State>>(
          subgoal::SubgoalSeries<State>(std::move(subgoals)), discount, hp.alpha_v, gamma_v);
    }
    case Method::nrs: {
      const double eta = hp.eta;
      shaping::Potential<State> phi([subgoals = std::move(subgoals), eta](const State& s) {
        return shaping::nrs_potential(s, subgoals, eta);
      });
      return std::make_unique<shaping::StaticPotentialShaper<State>>(std::move(phi), discount);
    }
    default:
      return std::make_unique<shaping::NoShaping<State>>();
  }
}

template <class State>
std::vector<double> abstract_values_of(const shaping::Shaper<State>& shaper) {
  if (auto* dta = dynamic_cast<const subgoal::DtaShaper<State>*>(&shaper))
    return dta->values().values();
  return {};
}

template <class State>
void freeze_shaper(shaping::Shaper<State>& shaper, const std::vector<double>& values) {
  if (auto* dta = dynamic_cast<subgoal::DtaShaper<State>*>(&shaper)) {
    if (static_cast<int>(values.size()) != dta->values().size())
      throw ConfigError("", 0, "policy abstract-value count does not match the subgoal series");
    for (std::size_t i = 0; i < values.size(); ++i)
      dta->values().set(subgoal::AbstractState{static_cast<int>(i)}, values[i]);
    dta->set_learning(false);
  }
}

// ---- gridworld ------------------------------------------------------------

/// Table row of a gridworld learner. DTA's potential is a function of the
/// subgoal count as well as the cell, so its table holds one layer of cells per
/// count; other methods use a single layer.
class GridKey {
 public:
  GridKey(const env::GridworldScenario& g, int layers) : g_(&g), layers_(layers) {}

  static int layers_for(Method method, const env::GridworldScenario& g) {
    return method == Method::dta ? static_cast<int>(g.subgoals.size()) + 1 : 1;
  }

  int layers() const { return layers_; }
  int rows() const { return layers_ * g_->num_states(); }
  void reset() { achieved_ = 0; }

  /// Follows the series in order, the same way the DTA tracker does.
  void observe(const env::GridStep& step) {
    if (layers_ == 1 || step.terminal || achieved_ >= layers_ - 1) return;
    if (step.subgoal == achieved_) ++achieved_;
  }

  int operator()(int cell) const { return achieved_ * g_->num_states() + cell; }

 private:
  const env::GridworldScenario* g_;
  int layers_;
  int achieved_ = 0;
};

struct GridRollout {
  EpisodeMetrics metrics;
  double discounted_return = 0.0;
};

GridRollout greedy_grid_rollout(const env::GridworldScenario& g, const learners::TabularLearner& q,
                                GridKey key, double gamma) {
  GridRollout out;
  key.reset();
  int s = g.index(g.start);
  double discount = 1.0;
  for (int t = 0; t < g.max_steps; ++t) {
    const auto step = env::step_grid(g, s, q.greedy(key(s)));
    key.observe(step);
    out.metrics.total_reward += step.reward;
    out.metrics.nav_time = t + 1;
    out.discounted_return += discount * step.reward;
    discount *= gamma;
    if (step.terminal) {
      out.metrics.success = true;
      break;
    }
    s = step.next;
  }
  return out;
}

SeedRun run_grid_seed(const ExperimentConfig& config, std::uint64_t seed) {
  const auto& g = config.scenario.grid();
  const auto& hp = config.hp;
  learners::TabularConfig tc;
  tc.alpha = hp.alpha;
  tc.gamma = hp.gamma;
  tc.epsilon = hp.epsilon;
  tc.rule = config.method == Method::sarsa ? learners::TabularRule::sarsa
            : config.method == Method::q_learn ? learners::TabularRule::q_learning
                                               : hp.tabular_rule;
  GridKey key(g, GridKey::layers_for(config.method, g));
  learners::TabularLearner learner(key.rows(), env::kNumGridActions, tc);
  auto shaper = make_shaper<int>(config.method, env::grid_subgoal_predicates(g), hp.gamma, hp);
  std::mt19937_64 rng(seed);

  SeedRun run;
  run.seed = seed;
  for (int ep = 0; ep < config.episodes; ++ep) {
    const double eps = hp.epsilon.at(ep, config.episodes);
    EpisodeMetrics m;
    m.epsilon = eps;
    int s = g.index(g.start);
    key.reset();
    shaper->begin_episode(s);
    int a = learners::select_action_egreedy(learner, key(s), eps, rng);
    for (int t = 0; t < g.max_steps; ++t) {
      const auto step = env::step_grid(g, s, a);
      const double f = shaper->on_transition(step.next, step.reward, step.terminal, step.terminal);
      const int row = key(s);
      key.observe(step);
      const int next_row = key(step.next);
      const int next_action =
          step.terminal ? -1 : learners::select_action_egreedy(learner, next_row, eps, rng);
      learner.update({row, a, step.reward, next_row, static_cast<std::size_t>(t)}, f,
                     step.terminal, next_action);
      m.total_reward += step.reward;
      m.nav_time = t + 1;
      if (step.terminal) {
        m.success = true;
        break;
      }
      s = step.next;
      a = next_action;
    }
    m.greedy_return = greedy_grid_rollout(g, learner, key, hp.gamma).discounted_return;
    run.episodes.push_back(m);
  }
  run.policy = TrainedPolicy{config.method,
                             TabularPolicy{learner.num_states(), learner.num_actions(), learner.table()}};
  return run;
}

// ---- social navigation ----------------------------------------------------

std::vector<int> layer_sizes(const Hyperparameters& hp) {
  std::vector<int> sizes{env::kJointFeatureSize};
  sizes.insert(sizes.end(), hp.hidden.begin(), hp.hidden.end());
  sizes.push_back(1);
  return sizes;
}

learners::OptimizerConfig optimizer_config(const Hyperparameters& hp) {
  learners::OptimizerConfig oc;
  oc.learning_rate = hp.net_learning_rate;
  oc.kind = hp.optimizer;
  oc.momentum = hp.momentum;
  return oc;
}

void train_from_replay(ValueNetwork& net, const ValueNetwork& target, learners::Optimizer& opt,
                       const learners::ReplayBuffer& replay, double discount, int batch_size,
                       std::mt19937_64& rng) {
  const auto batch = replay.sample(static_cast<std::size_t>(batch_size), rng);
  std::vector<Features> states(batch.size());
  std::vector<Features> nexts(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    states[i] = batch[i]->state;
    nexts[i] = batch[i]->next;
  }
  const Eigen::VectorXd bootstrap = target.forward_batch(learners::to_matrix(nexts));
  Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    y(k) = shaping::shaped_td_target(batch[i]->reward, 0.0,
                                     batch[i]->terminal ? 0.0 : bootstrap(k), discount);
  }
  learners::train_value_network(net, opt, learners::to_matrix(states), y);
}

SeedRun run_social_seed(const ExperimentConfig& config, std::uint64_t seed) {
  const auto& sc = config.scenario.social();
  const auto& hp = config.hp;
  const double discount = learner_discount(config.scenario, hp);
  std::mt19937_64 rng(seed);

  ValueNetwork net(layer_sizes(hp), rng);
  {
    learners::Optimizer demo_opt(optimizer_config(hp), net.num_parameters());
    const auto demos = learners::generate_demos(sc, hp.demo_episodes, hp.actions, hp.demo_noise, rng());
    learners::initialize_from_demos(net, demo_opt, demos, discount,
                                    {hp.demo_epochs, hp.batch_size}, rng);
  }
  ValueNetwork target = net;
  learners::Optimizer opt(optimizer_config(hp), net.num_parameters());
  learners::ReplayBuffer replay(static_cast<std::size_t>(hp.replay_capacity));
  auto shaper = make_shaper<env::JointState>(config.method, env::social_subgoal_predicates(sc),
                                             discount, hp);
  env::SocialNavEnv environment(sc, rng());
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  SeedRun run;
  run.seed = seed;
  for (int ep = 0; ep < config.episodes; ++ep) {
    const double eps = hp.epsilon.at(ep, config.episodes);
    EpisodeMetrics m;
    m.epsilon = eps;
    env::JointState s = environment.reset();
    shaper->begin_episode(s);
    while (!environment.done()) {
      const auto actions = learners::build_action_set(s.robot, sc.dt, hp.actions);
      env::VelocityCommand a;
      if (coin(rng) < eps) {
        std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
        a = actions[pick(rng)];
      } else {
        a = learners::cadrl_select_action(s, net, actions, sc.dt, discount, shaper.get()).action;
      }
      const auto step = environment.step(a);
      const bool goal = step.termination == env::Termination::goal;
      const bool terminal = goal || step.termination == env::Termination::collision;
      const double f = shaper->on_transition(step.next, step.reward, goal, terminal);
      replay.push({s.features(), step.reward + f, step.next.features(), terminal});
      if (replay.size() >= static_cast<std::size_t>(hp.batch_size))
        for (int u = 0; u < hp.updates_per_step; ++u)
          train_from_replay(net, target, opt, replay, discount, hp.batch_size, rng);

      m.total_reward += step.reward;
      m.nav_time = environment.steps();
      m.success = goal;
      m.collision = step.termination == env::Termination::collision;
      s = step.next;
    }
    if ((ep + 1) % std::max(1, hp.target_update_episodes) == 0) target = net;
    run.episodes.push_back(m);
  }
  run.policy = TrainedPolicy{config.method, CadrlPolicy{net, abstract_values_of(*shaper)}};
  return run;
}

EpisodeMetrics evaluate_social_episode(env::SocialNavEnv& environment, const CadrlPolicy& policy,
                                       shaping::Shaper<env::JointState>& shaper, double discount,
                                       const learners::ActionSetConfig& actions_config,
                                       int episode_id, std::ostream* trajectories) {
  const double dt = environment.scenario().dt;
  EpisodeMetrics m;
  env::JointState s = environment.reset();
  shaper.begin_episode(s);
  while (!environment.done()) {
    const auto actions = learners::build_action_set(s.robot, dt, actions_config);
    const auto a = learners::cadrl_select_action(s, policy.net, actions, dt, discount, &shaper).action;
    const auto step = environment.step(a);
    const bool goal = step.termination == env::Termination::goal;
    const bool terminal = goal || step.termination == env::Termination::collision;
    const int z_before = shaper.abstract_state();
    shaper.on_transition(step.next, step.reward, goal, terminal);
    m.total_reward += step.reward;
    m.nav_time = environment.steps();
    m.success = goal;
    m.collision = step.termination == env::Termination::collision;
    if (trajectories) {
      env::write_trajectory_row(*trajectories,
                                {episode_id, environment.steps(), step.next, step.reward,
                                 shaper.abstract_state(), shaper.abstract_state() > z_before});
    }
    s = step.next;
  }
  return m;
}

}  // namespace

SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed) {
  return config.scenario.is_grid() ? run_grid_seed(config, seed) : run_social_seed(config, seed);
}

RunSummary run_learning(const ExperimentConfig& config) {
  config.validate();
  RunSummary summary;
  summary.method = config.method;
  summary.runs.resize(config.seeds.size());

  unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(config.seeds.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < config.seeds.size(); ++i)
      summary.runs[i] = run_seed(config, config.seeds[i]);
    return summary;
  }

  std::vector<std::exception_ptr> errors(config.seeds.size());
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < config.seeds.size(); i = next++) {
        try {
          summary.runs[i] = run_seed(config, config.seeds[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return summary;
}

Aggregate evaluate_frozen(const TrainedPolicy& policy, const Scenario& scenario,
                          const Hyperparameters& hp, int episodes,
                          std::span<const std::uint64_t> seeds, std::ostream* trajectories) {
  std::vector<EpisodeMetrics> all;
  if (scenario.is_grid()) {
    const auto* table = std::get_if<TabularPolicy>(&policy.model);
    if (!table) throw ConfigError("", 0, "gridworld evaluation needs a tabular policy");
    const auto& g = scenario.grid();
    const GridKey key(g, GridKey::layers_for(policy.method, g));
    if (table->num_states != key.rows() || table->num_actions != env::kNumGridActions)
      throw ConfigError("", 0, "policy does not match the gridworld size");
    learners::TabularLearner q(table->num_states, table->num_actions, {});
    for (int s = 0; s < table->num_states; ++s)
      for (int a = 0; a < table->num_actions; ++a)
        q.set_q(s, a, table->q[static_cast<std::size_t>(s * table->num_actions + a)]);
    // deterministic: every seed and episode repeats the same rollout
    const EpisodeMetrics m = greedy_grid_rollout(g, q, key, hp.gamma).metrics;
    all.assign(seeds.size() * static_cast<std::size_t>(std::max(episodes, 0)), m);
    return Aggregate::of(all);
  }

  const auto* cadrl = std::get_if<CadrlPolicy>(&policy.model);
  if (!cadrl) throw ConfigError("", 0, "social-nav evaluation needs a value-network policy");
  if (cadrl->net.input_size() != env::kJointFeatureSize)
    throw ConfigError("", 0, "policy network input size does not match the joint state");
  const auto& sc = scenario.social();
  const double discount = learner_discount(scenario, hp);
  auto shaper =
      make_shaper<env::JointState>(policy.method, env::social_subgoal_predicates(sc), discount, hp);
  freeze_shaper(*shaper, cadrl->abstract_values);
  if (trajectories) env::write_trajectory_header(*trajectories);
  int episode_id = 0;
  for (std::uint64_t seed : seeds) {
    env::SocialNavEnv environment(sc, seed);
    for (int e = 0; e < episodes; ++e)
      all.push_back(evaluate_social_episode(environment, *cadrl, *shaper, discount, hp.actions,
                                            episode_id++, trajectories));
  }
  return Aggregate::of(all);
}

Aggregate evaluate_summary(const RunSummary& summary, const ExperimentConfig& config) {
  std::vector<EpisodeMetrics> pooled;
  std::vector<Aggregate> parts;
  int total = 0;
  Aggregate acc;
  for (const auto& run : summary.runs) {
    if (!run.policy) throw ContractViolation("run has no trained policy");
    // Evaluation seeds are disjoint from the training seed stream.
    const std::uint64_t eval_seed = run.seed ^ 0x9e3779b97f4a7c15ULL;
    const Aggregate a = evaluate_frozen(*run.policy, config.scenario, config.hp,
                                        config.eval_episodes, std::span(&eval_seed, 1));
    const double n = a.episodes;
    acc.success_rate += a.success_rate * n;
    acc.collision_rate += a.collision_rate * n;
    acc.timeout_rate += a.timeout_rate * n;
    acc.mean_nav_time += a.mean_nav_time * n;
    acc.mean_total_reward += a.mean_total_reward * n;
    total += a.episodes;
  }
  if (total > 0) {
    acc.success_rate /= total;
    acc.collision_rate /= total;
    acc.timeout_rate /= total;
    acc.mean_nav_time /= total;
    acc.mean_total_reward /= total;
  }
  acc.episodes = total;
  return acc;
}

// ---- output ---------------------------------------------------------------

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_episode_csv(std::ostream& out, const RunSummary& summary) {
  out << "method,seed,episode,epsilon,success,collision,nav_time,total_reward,greedy_return\n";
  for (const auto& run : summary.runs) {
    for (std::size_t e = 0; e < run.episodes.size(); ++e) {
      const auto& m = run.episodes[e];
      out << to_string(summary.method) << ',' << run.seed << ',' << (e + 1) << ',' << fmt(m.epsilon)
          << ',' << (m.success ? 1 : 0) << ',' << (m.collision ? 1 : 0) << ',' << m.nav_time << ','
          << fmt(m.total_reward) << ',' << fmt(m.greedy_return) << '\n';
    }
  }
}

void write_comparison_header(std::ostream& out) {
  out << "method,suc_rate,nav_time,col_rate,total_reward,timeout_rate,episodes\n";
}

void write_comparison_row(std::ostream& out, Method method, const Aggregate& a) {
  out << to_string(method) << ',' << fmt(a.success_rate) << ',' << fmt(a.mean_nav_time) << ','
      << fmt(a.collision_rate) << ',' << fmt(a.mean_total_reward) << ',' << fmt(a.timeout_rate)
      << ',' << a.episodes << '\n';
}

std::pair<double, double> mean_and_se(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return {mean, sd / std::sqrt(static_cast<double>(xs.size()))};
}

std::vector<CurvePoint> learning_curve(const RunSummary& summary, int window) {
  if (window < 1) throw ContractViolation("smoothing window must be >= 1");
  std::size_t length = 0;
  for (const auto& run : summary.runs) length = std::max(length, run.episodes.size());

  auto smooth = [window](const std::vector<double>& xs) {
    std::vector<double> out(xs.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sum += xs[i];
      if (i >= static_cast<std::size_t>(window)) sum -= xs[i - static_cast<std::size_t>(window)];
      out[i] = sum / static_cast<double>(std::min<std::size_t>(i + 1, static_cast<std::size_t>(window)));
    }
    return out;
  };

  std::vector<std::vector<double>> reward, nav, success;
  for (const auto& run : summary.runs) {
    std::vector<double> r, n, s;
    for (const auto& m : run.episodes) {
      r.push_back(m.total_reward);
      n.push_back(m.nav_time);
      s.push_back(m.success ? 1.0 : 0.0);
    }
    reward.push_back(smooth(r));
    nav.push_back(smooth(n));
    success.push_back(smooth(s));
  }

  std::vector<CurvePoint> curve;
  for (std::size_t e = 0; e < length; ++e) {
    std::vector<double> r, n, s;
    for (std::size_t k = 0; k < reward.size(); ++k) {
      if (e >= reward[k].size()) continue;
      r.push_back(reward[k][e]);
      n.push_back(nav[k][e]);
      s.push_back(success[k][e]);
    }
    CurvePoint p;
    p.episode = static_cast<int>(e + 1);
    p.seeds = static_cast<int>(r.size());
    std::tie(p.reward_mean, p.reward_se) = mean_and_se(r);
    std::tie(p.nav_time_mean, p.nav_time_se) = mean_and_se(n);
    std::tie(p.success_mean, p.success_se) = mean_and_se(s);
    curve.push_back(p);
  }
  return curve;
}

void emit_learning_curve(std::ostream& out, std::span<const RunSummary> summaries, int window) {
  if (summaries.empty()) throw ContractViolation("learning curve needs at least one summary");
  out << "method,episode,seeds,reward_mean,reward_se,nav_time_mean,nav_time_se,success_mean,"
         "success_se\n";
  for (const auto& summary : summaries) {
    for (const auto& p : learning_curve(summary, window)) {
      out << to_string(summary.method) << ',' << p.episode << ',' << p.seeds << ','
          << fmt(p.reward_mean) << ',' << fmt(p.reward_se) << ',' << fmt(p.nav_time_mean) << ','
          << fmt(p.nav_time_se) << ',' << fmt(p.success_mean) << ',' << fmt(p.success_se) << '\n';
    }
  }
}

std::vector<RunSummary> read_episode_csv(std::istream& in, const std::string& source) {
  std::vector<RunSummary> summaries;
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw ConfigError(source, 1, "empty episode file");
  ++line_no;
  if (line.rfind("method,seed,episode", 0) != 0) throw ConfigError(source, 1, "unexpected header");
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() == 8) cols.emplace_back();  // trailing empty greedy_return
    if (cols.size() != 9) throw ConfigError(source, line_no, "expected 9 columns");
    try {
      const Method method = parse_method(cols[0]);
      const std::uint64_t seed = std::stoull(cols[1]);
      auto it = std::find_if(summaries.begin(), summaries.end(),
                             [&](const RunSummary& s) { return s.method == method; });
      if (it == summaries.end()) {
        summaries.push_back(RunSummary{method, {}, std::nullopt});
        it = std::prev(summaries.end());
      }
      auto run = std::find_if(it->runs.begin(), it->runs.end(),
                              [&](const SeedRun& r) { return r.seed == seed; });
      if (run == it->runs.end()) {
        it->runs.push_back(SeedRun{seed, {}, std::nullopt});
        run = std::prev(it->runs.end());
      }
      EpisodeMetrics m;
      m.epsilon = std::stod(cols[3]);
      m.success = cols[4] == "1";
      m.collision = cols[5] == "1";
      m.nav_time = std::stoi(cols[6]);
      m.total_reward = std::stod(cols[7]);
      if (!cols[8].empty()) m.greedy_return = std::stod(cols[8]);
      run->episodes.push_back(m);
    } catch (const ConfigError& e) {
      throw ConfigError(source, line_no, e.what());
    } catch (const std::exception&) {
      throw ConfigError(source, line_no, "malformed number");
    }
  }
  return summaries;
}

double sign_test_p(int wins, int losses) {
  const int n = wins + losses;
  if (n == 0) return 1.0;
  double p = 0.0;
  for (int k = wins; k <= n; ++k)
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
                  n * std::log(2.0));
  return std::min(1.0, p);
}

int episodes_to_threshold(std::span<const EpisodeMetrics> episodes, double threshold) {
  for (std::size_t i = 0; i < episodes.size(); ++i)
    if (episodes[i].greedy_return >= threshold) return static_cast<int>(i + 1);
  return static_cast<int>(episodes.size()) + 1;
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw ContractViolation("median of an empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// ---- policy files ---------------------------------------------------------

void save_policy(std::ostream& out, const TrainedPolicy& policy) {
  out << "dta-policy 1\n";
  out << "method " << to_string(policy.method) << '\n';
  char buf[32];
  if (const auto* t = std::get_if<TabularPolicy>(&policy.model)) {
    out << "tabular " << t->num_states << ' ' << t->num_actions << '\n';
    for (int s = 0; s < t->num_states; ++s) {
      for (int a = 0; a < t->num_actions; ++a) {
        std::snprintf(buf, sizeof buf, "%.17g", t->q[static_cast<std::size_t>(s * t->num_actions + a)]);
        out << (a ? " " : "") << buf;
      }
      out << '\n';
    }
    return;
  }
  const auto& c = std::get<CadrlPolicy>(policy.model);
  out << "abstract_values " << c.abstract_values.size();
  for (double v : c.abstract_values) {
    std::snprintf(buf, sizeof buf, " %.17g", v);
    out << buf;
  }
  out << '\n';
  c.net.save(out);
}

TrainedPolicy load_policy(std::istream& in, const std::string& source) {
  std::string line;
  int line_no = 0;
  auto next = [&]() -> std::istringstream {
    if (!std::getline(in, line)) throw ConfigError(source, line_no + 1, "unexpected end of file");
    ++line_no;
    return std::istringstream(line);
  };
  {
    auto f = next();
    std::string magic;
    int version = 0;
    if (!(f >> magic >> version) || magic != "dta-policy" || version != 1)
      throw ConfigError(source, line_no, "not a version-1 policy file");
  }
  TrainedPolicy policy;
  {
    auto f = next();
    std::string key, name;
    if (!(f >> key >> name) || key != "method") throw ConfigError(source, line_no, "expected 'method'");
    policy.method = parse_method(name);
  }
  auto f = next();
  std::string kind;
  f >> kind;
  if (kind == "tabular") {
    TabularPolicy t;
    if (!(f >> t.num_states >> t.num_actions) || t.num_states <= 0 || t.num_actions <= 0)
      throw ConfigError(source, line_no, "bad table shape");
    t.q.resize(static_cast<std::size_t>(t.num_states * t.num_actions));
    for (int s = 0; s < t.num_states; ++s) {
      auto row = next();
      for (int a = 0; a < t.num_actions; ++a)
        if (!(row >> t.q[static_cast<std::size_t>(s * t.num_actions + a)]))
          throw ConfigError(source, line_no, "truncated Q row");
    }
    policy.model = std::move(t);
    return policy;
  }
  if (kind != "abstract_values") throw ConfigError(source, line_no, "expected 'tabular' or 'abstract_values'");
  std::size_t n = 0;
  if (!(f >> n)) throw ConfigError(source, line_no, "bad abstract value count");
  std::vector<double> values(n);
  for (auto& v : values)
    if (!(f >> v)) throw ConfigError(source, line_no, "truncated abstract values");
  policy.model = CadrlPolicy{ValueNetwork::load(in, source), std::move(values)};
  return policy;
}

}  // namespace dta::harness
