#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dta/errors.hpp"
#include "dta/harness.hpp"

namespace fs = std::filesystem;
using namespace dta;
using namespace dta::harness;

namespace {

struct HyperFlags {
  Hyperparameters hp;
  double gamma_v = -1.0;  // < 0: unset
  std::string tabular_rule = "q-learning";
  std::string hidden = "100,100,100";
  std::string optimizer = "adam";
};

void add_hyper_flags(CLI::App& app, HyperFlags& f) {
  auto& hp = f.hp;
  app.add_option("--gamma", hp.gamma, "discount factor")->capture_default_str();
  app.add_option("--alpha", hp.alpha, "tabular learning rate")->capture_default_str();
  app.add_option("--alpha-v", hp.alpha_v, "abstract value learning rate")->capture_default_str();
  app.add_option("--gamma-v", f.gamma_v, "abstract value discount (default: learner's per-step discount)");
  app.add_option("--epsilon-start", hp.epsilon.start)->capture_default_str();
  app.add_option("--epsilon-end", hp.epsilon.end)->capture_default_str();
  app.add_option("--eta", hp.eta, "NRS potential height")->capture_default_str();
  app.add_option("--tabular-rule", f.tabular_rule, "base rule of shaped tabular runs")
      ->check(CLI::IsMember({"q-learning", "sarsa"}))
      ->capture_default_str();
  app.add_option("--hidden", f.hidden, "hidden layer sizes, comma separated")->capture_default_str();
  app.add_option("--net-lr", hp.net_learning_rate)->capture_default_str();
  app.add_option("--optimizer", f.optimizer, "value-network optimizer")
      ->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();
  app.add_option("--momentum", hp.momentum, "sgd momentum")->capture_default_str();
  app.add_option("--batch-size", hp.batch_size)->capture_default_str();
  app.add_option("--replay-capacity", hp.replay_capacity)->capture_default_str();
  app.add_option("--updates-per-step", hp.updates_per_step)->capture_default_str();
  app.add_option("--target-update", hp.target_update_episodes, "episodes between target syncs")
      ->capture_default_str();
  app.add_option("--demo-episodes", hp.demo_episodes)->capture_default_str();
  app.add_option("--demo-epochs", hp.demo_epochs)->capture_default_str();
  app.add_option("--demo-noise", hp.demo_noise)->capture_default_str();
  app.add_option("--speeds", hp.actions.num_speeds, "speed samples")->capture_default_str();
  app.add_option("--headings", hp.actions.num_headings, "heading samples")->capture_default_str();
}

Hyperparameters finish(const HyperFlags& f) {
  Hyperparameters hp = f.hp;
  if (f.gamma_v >= 0.0) hp.gamma_v = f.gamma_v;
  hp.tabular_rule =
      f.tabular_rule == "sarsa" ? learners::TabularRule::sarsa : learners::TabularRule::q_learning;
  hp.optimizer = f.optimizer == "sgd" ? learners::OptimizerConfig::Kind::sgd
                                      : learners::OptimizerConfig::Kind::adam;
  hp.hidden.clear();
  std::stringstream ss(f.hidden);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      hp.hidden.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("--hidden", 0, "not an integer list: '" + f.hidden + "'");
    }
  }
  return hp;
}

struct RunFlags {
  std::string scenario;
  int episodes = 100;
  std::vector<std::uint64_t> seeds;
  int num_seeds = 10;
  int eval_episodes = 500;
  int threads = 0;
  std::string out = ".";
};

void add_run_flags(CLI::App& app, RunFlags& f) {
  app.add_option("--scenario", f.scenario, "scenario file")->required();
  app.add_option("--episodes", f.episodes, "learning episodes per seed")->capture_default_str();
  app.add_option("--seeds", f.seeds, "explicit seed list")->delimiter(',');
  app.add_option("--num-seeds", f.num_seeds, "seeds 1..n when --seeds is absent")
      ->capture_default_str();
  app.add_option("--eval-episodes", f.eval_episodes, "frozen evaluation episodes per seed")
      ->capture_default_str();
  app.add_option("--threads", f.threads, "worker threads (0: all cores)")->capture_default_str();
  app.add_option("--out", f.out, "output directory (env DTA_OUTPUT_DIR overrides)")
      ->capture_default_str();
}

fs::path output_dir(const std::string& flag) {
  const char* env = std::getenv("DTA_OUTPUT_DIR");
  fs::path dir = env && *env ? fs::path(env) : fs::path(flag);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

ExperimentConfig make_config(Method method, const RunFlags& rf, const HyperFlags& hf) {
  ExperimentConfig config;
  config.method = method;
  config.scenario = load_scenario(rf.scenario);
  config.episodes = rf.episodes;
  if (!rf.seeds.empty()) {
    config.seeds = rf.seeds;
  } else {
    config.seeds.clear();
    for (int i = 1; i <= rf.num_seeds; ++i) config.seeds.push_back(static_cast<std::uint64_t>(i));
  }
  config.eval_episodes = rf.eval_episodes;
  config.threads = rf.threads;
  config.hp = finish(hf);
  config.validate();
  return config;
}

/// Learns, writes per-episode and policy files, and returns the frozen
/// evaluation (if requested).
std::optional<Aggregate> learn_and_write(const ExperimentConfig& config, const fs::path& dir) {
  const RunSummary summary = run_learning(config);
  const std::string name = to_string(config.method);
  {
    auto out = open_out(dir / (name + "_episodes.csv"));
    write_episode_csv(out, summary);
  }
  for (const auto& run : summary.runs) {
    auto out = open_out(dir / (name + "_seed" + std::to_string(run.seed) + ".policy"));
    save_policy(out, *run.policy);
  }
  if (config.eval_episodes <= 0) return std::nullopt;
  const Aggregate agg = evaluate_summary(summary, config);
  auto out = open_out(dir / (name + "_eval.csv"));
  write_comparison_header(out);
  write_comparison_row(out, config.method, agg);
  return agg;
}

std::string escape(std::string s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

int fail(const std::string& code, const std::string& message, int exit_code) {
  std::cerr << "error: code=" << code << " message=\"" << escape(message) << "\"\n";
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subgoal-shaped reinforcement learning experiments"};
  app.require_subcommand(1);

  // learn
  auto* learn = app.add_subcommand("learn", "train one method over a seed list");
  std::string learn_method;
  RunFlags learn_run;
  HyperFlags learn_hp;
  learn->add_option("--method", learn_method, "dta | nrs | base-cadrl | q-learn | sarsa")->required();
  add_run_flags(*learn, learn_run);
  add_hyper_flags(*learn, learn_hp);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a saved policy with learning disabled");
  std::string policy_path, eval_scenario, eval_out = ".", trajectories;
  int eval_episodes = 500;
  std::vector<std::uint64_t> eval_seeds{1};
  HyperFlags eval_hp;
  eval->add_option("--policy", policy_path, "policy file")->required();
  eval->add_option("--scenario", eval_scenario, "scenario file")->required();
  eval->add_option("--episodes", eval_episodes, "episodes per seed")->capture_default_str();
  eval->add_option("--seeds", eval_seeds, "environment seeds")->delimiter(',');
  eval->add_option("--out", eval_out, "output directory (env DTA_OUTPUT_DIR overrides)");
  eval->add_option("--trajectories", trajectories, "file name for a per-step trajectory dump");
  add_hyper_flags(*eval, eval_hp);

  // curve
  auto* curve = app.add_subcommand("curve", "mean and standard error learning curves");
  std::vector<std::string> curve_inputs;
  int window = 1;
  std::string curve_file = "curve.csv", curve_out = ".";
  curve->add_option("--input", curve_inputs, "episode CSV files")->required();
  curve->add_option("--window", window, "trailing moving-average window")->capture_default_str();
  curve->add_option("--file", curve_file, "output file name")->capture_default_str();
  curve->add_option("--out", curve_out, "output directory (env DTA_OUTPUT_DIR overrides)");

  // compare
  auto* compare = app.add_subcommand("compare", "train and evaluate methods, write a comparison table");
  std::vector<std::string> compare_methods{"dta", "base-cadrl", "nrs"};
  RunFlags compare_run;
  HyperFlags compare_hp;
  compare->add_option("--methods", compare_methods, "methods in table order")
      ->delimiter(',')
      ->capture_default_str();
  add_run_flags(*compare, compare_run);
  add_hyper_flags(*compare, compare_hp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*learn) {
      const auto config = make_config(parse_method(learn_method), learn_run, learn_hp);
      const auto dir = output_dir(learn_run.out);
      if (auto agg = learn_and_write(config, dir)) write_comparison_row(std::cout, config.method, *agg);
    } else if (*eval) {
      std::ifstream in(policy_path);
      if (!in) throw ConfigError(policy_path, 0, "cannot open policy file");
      const TrainedPolicy policy = load_policy(in, policy_path);
      const Scenario scenario = load_scenario(eval_scenario);
      const Hyperparameters hp = finish(eval_hp);
      const auto dir = output_dir(eval_out);
      std::ofstream traj;
      if (!trajectories.empty()) traj = open_out(dir / trajectories);
      const Aggregate agg = evaluate_frozen(policy, scenario, hp, eval_episodes, eval_seeds,
                                           trajectories.empty() ? nullptr : &traj);
      auto out = open_out(dir / (std::string(to_string(policy.method)) + "_eval.csv"));
      write_comparison_header(out);
      write_comparison_row(out, policy.method, agg);
      write_comparison_row(std::cout, policy.method, agg);
    } else if (*curve) {
      std::vector<RunSummary> all;
      for (const auto& path : curve_inputs) {
        std::ifstream in(path);
        if (!in) throw ConfigError(path, 0, "cannot open episode file");
        for (auto& s : read_episode_csv(in, path)) all.push_back(std::move(s));
      }
      const auto dir = output_dir(curve_out);
      auto out = open_out(dir / curve_file);
      emit_learning_curve(out, all, window);
    } else if (*compare) {
      std::vector<Method> methods;
      for (const auto& m : compare_methods) methods.push_back(parse_method(m));
      const auto dir = output_dir(compare_run.out);
      std::vector<std::pair<Method, Aggregate>> rows;
      for (Method m : methods) {
        auto config = make_config(m, compare_run, compare_hp);
        if (config.eval_episodes <= 0) throw ConfigError("--eval-episodes", 0, "compare needs evaluation episodes");
        rows.emplace_back(m, *learn_and_write(config, dir));
      }
      auto out = open_out(dir / "comparison.csv");
      write_comparison_header(out);
      write_comparison_header(std::cout);
      for (const auto& [m, agg] : rows) {
        write_comparison_row(out, m, agg);
        write_comparison_row(std::cout, m, agg);
      }
    }
  } catch (const ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const InitializationFailed& e) {
    return fail("initialization", e.what(), 3);
  } catch (const TrainingDiverged& e) {
    return fail("diverged", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
  return 0;
}
