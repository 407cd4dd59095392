#pragma once

#include <array>
#include <deque>
#include <random>
#include <span>
#include <vector>

#include "dta/shaping.hpp"
#include "dta/social_nav.hpp"
#include "dta/value_network.hpp"

namespace dta::learners {

using env::JointState;
using env::VelocityCommand;
using Features = std::array<double, env::kJointFeatureSize>;

struct ActionSetConfig {
  int num_speeds = 5;
  int num_headings = 7;
};

/// Rotation and heading-rate limits: v_s < v_pref, |phi - psi| < pi/6 and
/// |psi' - psi| < dt v_pref. Zero-speed commands keep the heading.
bool admissible(const env::AgentState& robot, const VelocityCommand& action, double dt);

/// Zero-speed command first, then every admissible speed x heading pair.
/// Speeds are k v_pref / (n + 1), headings psi - pi/6 + k (pi/3) / (m + 1).
std::vector<VelocityCommand> build_action_set(const env::AgentState& robot, double dt,
                                              const ActionSetConfig& config);

/// gamma^(dt v_pref): per-step discount of the value network.
double step_discount(double gamma, double dt, double v_pref);

struct Selection {
  VelocityCommand action;
  int index = -1;  // into the candidate list; -1 for the fallback
  double score = 0.0;
};

/// One-step lookahead: argmax over candidates of r + F + discount * V(s'),
/// with s' the joint state after the robot executes the command and the human
/// keeps its velocity. Predicted collisions and goal arrivals are terminal
/// (no bootstrap). `shaper` may be null. Lowest index wins ties. An empty
/// candidate list yields the zero-speed command.
Selection cadrl_select_action(const JointState& joint, const ValueNetwork& net,
                              std::span<const VelocityCommand> actions, double dt,
                              double discount,
                              const shaping::Shaper<JointState>* shaper = nullptr);

struct Transition {
  Features state{};
  double reward = 0.0;  // environment reward plus shaping
  Features next{};
  bool terminal = false;
};

/// Fixed-capacity FIFO of transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void push(const Transition& t);
  std::size_t size() const { return items_.size(); }
  void clear() { items_.clear(); }
  std::vector<const Transition*> sample(std::size_t n, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

struct DemoEpisode {
  std::vector<Features> states;  // states[t] precedes rewards[t]
  std::vector<double> rewards;
  bool reached_goal = false;
};

/// Scripted demonstrator: the admissible command closest to a straight-to-goal
/// velocity among those keeping a comfortable predicted gap to the human (the
/// roomiest command if none does); with probability `noise` a uniformly random
/// admissible command instead.
VelocityCommand scripted_robot_action(const JointState& joint, double dt,
                                      const ActionSetConfig& actions, double noise,
                                      std::mt19937_64& rng);

std::vector<DemoEpisode> generate_demos(const env::SocialNavScenario& scenario, int episodes,
                                        const ActionSetConfig& actions, double noise,
                                        std::uint64_t seed);

struct DemoTrainingConfig {
  int epochs = 20;
  int batch_size = 64;
};

/// Regresses the network on discounted returns sum_i discount^i r_{t+i} of
/// every demo state. Throws InitializationFailed if no demo reached the goal.
/// Returns the final full-data loss.
double initialize_from_demos(ValueNetwork& net, Optimizer& optimizer,
                             const std::vector<DemoEpisode>& demos, double discount,
                             const DemoTrainingConfig& config, std::mt19937_64& rng);

Eigen::MatrixXd to_matrix(std::span<const Features> rows);

}  // namespace dta::learners
