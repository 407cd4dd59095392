#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dta/cadrl.hpp"
#include "dta/gridworld.hpp"
#include "dta/social_nav.hpp"
#include "dta/tabular.hpp"
#include "dta/value_network.hpp"

namespace dta::harness {

enum class Method { dta, nrs, base_cadrl, q_learn, sarsa };

Method parse_method(const std::string& name);
const char* to_string(Method method);

struct Scenario {
  std::string name;
  std::variant<env::GridworldScenario, env::SocialNavScenario> spec;

  bool is_grid() const { return std::holds_alternative<env::GridworldScenario>(spec); }
  const env::GridworldScenario& grid() const { return std::get<env::GridworldScenario>(spec); }
  const env::SocialNavScenario& social() const { return std::get<env::SocialNavScenario>(spec); }
};

/// `type = gridworld` or `type = social`, then the scenario keys.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const KeyValueFile& file);

struct Hyperparameters {
  double gamma = 0.9;
  double alpha = 0.5;    // tabular learning rate
  double alpha_v = 0.1;  // abstract value learning rate
  /// Abstract-value discount; unset means the learner's per-step discount.
  std::optional<double> gamma_v;
  learners::EpsilonSchedule epsilon{0.5, 0.4};
  double eta = 1.0;
  /// Base rule for shaped tabular runs (dta/nrs on a gridworld).
  learners::TabularRule tabular_rule = learners::TabularRule::q_learning;

  std::vector<int> hidden{100, 100, 100};
  double net_learning_rate = 0.001;
  learners::OptimizerConfig::Kind optimizer = learners::OptimizerConfig::Kind::adam;
  double momentum = 0.0;  // sgd only
  int batch_size = 64;
  int replay_capacity = 10000;
  int updates_per_step = 1;
  int target_update_episodes = 20;
  int demo_episodes = 300;
  int demo_epochs = 20;
  double demo_noise = 0.5;
  learners::ActionSetConfig actions{};
};

struct ExperimentConfig {
  Method method = Method::dta;
  Scenario scenario;
  int episodes = 100;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int eval_episodes = 500;
  Hyperparameters hp;
  int threads = 0;  // 0: hardware concurrency

  /// Throws ConfigError on an inconsistent combination.
  void validate() const;
};

struct EpisodeMetrics {
  bool success = false;
  bool collision = false;
  int nav_time = 0;
  double total_reward = 0.0;
  double epsilon = 0.0;
  /// Discounted return of a greedy rollout after the episode (tabular only).
  double greedy_return = std::numeric_limits<double>::quiet_NaN();
};

struct Aggregate {
  int episodes = 0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double timeout_rate = 0.0;
  double mean_nav_time = 0.0;
  double mean_total_reward = 0.0;

  static Aggregate of(std::span<const EpisodeMetrics> episodes);
};

struct TabularPolicy {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> q;
};

struct CadrlPolicy {
  learners::ValueNetwork net;
  /// Learned potential for DTA; empty otherwise.
  std::vector<double> abstract_values;
};

struct TrainedPolicy {
  Method method = Method::dta;
  std::variant<TabularPolicy, CadrlPolicy> model;
};

void save_policy(std::ostream& out, const TrainedPolicy& policy);
TrainedPolicy load_policy(std::istream& in, const std::string& source = "<policy>");

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<EpisodeMetrics> episodes;
  std::optional<TrainedPolicy> policy;
};

struct RunSummary {
  Method method = Method::dta;
  std::vector<SeedRun> runs;  // config seed order
  std::optional<Aggregate> after_learning;
};

SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed);

/// Runs every seed (in parallel, one isolated context each) and collects the
/// results in seed order.
RunSummary run_learning(const ExperimentConfig& config);

/// Greedy (epsilon = 0) episodes with learning disabled. Each seed drives
/// `episodes` runs; results are pooled. `trajectories`, when given, receives
/// the per-step dump of social-nav episodes.
Aggregate evaluate_frozen(const TrainedPolicy& policy, const Scenario& scenario,
                          const Hyperparameters& hp, int episodes,
                          std::span<const std::uint64_t> seeds,
                          std::ostream* trajectories = nullptr);

/// Frozen evaluation of every seed's policy, pooled.
Aggregate evaluate_summary(const RunSummary& summary, const ExperimentConfig& config);

void write_episode_csv(std::ostream& out, const RunSummary& summary);

/// Table columns: method, suc. rate, nav. time, col. rate, total reward.
void write_comparison_header(std::ostream& out);
void write_comparison_row(std::ostream& out, Method method, const Aggregate& agg);

struct CurvePoint {
  int episode = 0;
  int seeds = 0;
  double reward_mean = 0.0;
  double reward_se = 0.0;
  double nav_time_mean = 0.0;
  double nav_time_se = 0.0;
  double success_mean = 0.0;
  double success_se = 0.0;
};

/// Per-episode mean and standard error across seeds after a trailing moving
/// average of `window` episodes on each seed's series.
std::vector<CurvePoint> learning_curve(const RunSummary& summary, int window);
void emit_learning_curve(std::ostream& out, std::span<const RunSummary> summaries, int window);

/// Rebuilds per-method summaries (metrics only) from an episode CSV.
std::vector<RunSummary> read_episode_csv(std::istream& in, const std::string& source);

/// Mean and standard error (sample sd / sqrt(n); 0 for n < 2).
std::pair<double, double> mean_and_se(std::span<const double> xs);

/// One-sided sign test: P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
double sign_test_p(int wins, int losses);

/// First 1-based episode whose greedy return reaches `threshold`; episodes + 1
/// if never.
int episodes_to_threshold(std::span<const EpisodeMetrics> episodes, double threshold);

double median(std::vector<double> xs);

/// Per-step discount the learner of `method` on `scenario` uses.
double learner_discount(const Scenario& scenario, const Hyperparameters& hp);

}  // namespace dta::harness
