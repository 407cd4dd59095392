#include "dta/cadrl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dta/errors.hpp"

namespace dta::learners {

namespace {
constexpr double kPi = std::numbers::pi;
}

bool admissible(const env::AgentState& robot, const VelocityCommand& action, double dt) {
  if (!(action.speed >= 0.0 && action.speed < robot.v_pref)) return false;
  if (action.speed == 0.0) return true;
  const double turn = std::abs(env::wrap_angle(action.heading - robot.heading));
  return turn < kPi / 6.0 && turn < dt * robot.v_pref;
}

std::vector<VelocityCommand> build_action_set(const env::AgentState& robot, double dt,
                                              const ActionSetConfig& config) {
  std::vector<VelocityCommand> out{{0.0, robot.heading}};
  for (int i = 1; i <= config.num_speeds; ++i) {
    const double speed = robot.v_pref * i / (config.num_speeds + 1);
    for (int j = 1; j <= config.num_headings; ++j) {
      const double offset = -kPi / 6.0 + j * (kPi / 3.0) / (config.num_headings + 1);
      VelocityCommand cmd{speed, env::wrap_angle(robot.heading + offset)};
      if (admissible(robot, cmd, dt)) out.push_back(cmd);
    }
  }
  return out;
}

double step_discount(double gamma, double dt, double v_pref) {
  return std::pow(gamma, dt * v_pref);
}

Eigen::MatrixXd to_matrix(std::span<const Features> rows) {
  Eigen::MatrixXd m(env::kJointFeatureSize, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c)
    for (int r = 0; r < env::kJointFeatureSize; ++r)
      m(r, static_cast<Eigen::Index>(c)) = rows[c][static_cast<std::size_t>(r)];
  return m;
}

Selection cadrl_select_action(const JointState& joint, const ValueNetwork& net,
                              std::span<const VelocityCommand> actions, double dt,
                              double discount, const shaping::Shaper<JointState>* shaper) {
  if (actions.empty()) return {VelocityCommand{0.0, joint.robot.heading}, -1, 0.0};

  std::vector<Features> next_features(actions.size());
  std::vector<double> immediate(actions.size());
  std::vector<bool> terminal(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const JointState next = env::propagate_joint(joint, actions[i], dt);
    const double d_min = env::min_separation(
        joint.robot.position, actions[i].velocity(), joint.human.position,
        joint.human.velocity, joint.robot.radius + joint.human.radius, dt);
    const bool collided = d_min < 0.0;
    const bool reached = !collided && env::at_goal(next.robot);
    terminal[i] = collided || reached;
    immediate[i] = env::social_reward(d_min, reached);
    if (shaper) immediate[i] += shaper->preview(next, reached, terminal[i]);
    next_features[i] = next.features();
  }
  const Eigen::VectorXd values = net.forward_batch(to_matrix(next_features));

  Selection best{actions[0], -1, -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const double score =
        immediate[i] + (terminal[i] ? 0.0 : discount * values(static_cast<Eigen::Index>(i)));
    if (score > best.score) best = {actions[i], static_cast<int>(i), score};
  }
  return best;
}

void ReplayBuffer::push(const Transition& t) {
  if (capacity_ == 0) return;
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(t);
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  std::vector<const Transition*> out;
  if (items_.empty()) return out;
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[pick(rng)]);
  return out;
}

VelocityCommand scripted_robot_action(const JointState& joint, double dt,
                                      const ActionSetConfig& config, double noise,
                                      std::mt19937_64& rng) {
  const auto actions = build_action_set(joint.robot, dt, config);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < noise) {
    std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
    return actions[pick(rng)];
  }

  const auto& robot = joint.robot;
  const env::Vec2 to_goal = robot.goal - robot.position;
  const double dist = to_goal.norm();
  const env::Vec2 desired = dist > 0.0 ? to_goal * (robot.v_pref / dist) : env::Vec2{};
  const double radii = robot.radius + joint.human.radius;
  // Yield rule: keep a comfortable gap to the human, assumed to hold its
  // velocity over the horizon; otherwise take whatever keeps the most room.
  constexpr double kHorizon = 1.0;
  constexpr double kComfort = 0.2;

  const VelocityCommand* best = nullptr;
  double best_err = std::numeric_limits<double>::infinity();
  const VelocityCommand* roomiest = &actions.front();
  double most_room = -std::numeric_limits<double>::infinity();
  for (const auto& a : actions) {
    const double room = env::min_separation(robot.position, a.velocity(), joint.human.position,
                                            joint.human.velocity, radii, kHorizon);
    if (room > most_room) {
      most_room = room;
      roomiest = &a;
    }
    if (room < kComfort) continue;
    const double err = (a.velocity() - desired).norm();
    if (err < best_err) {
      best_err = err;
      best = &a;
    }
  }
  return best ? *best : *roomiest;
}

std::vector<DemoEpisode> generate_demos(const env::SocialNavScenario& scenario, int episodes,
                                        const ActionSetConfig& actions, double noise,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  env::SocialNavEnv environment(scenario, rng());
  std::vector<DemoEpisode> demos;
  demos.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    DemoEpisode demo;
    JointState s = environment.reset();
    while (!environment.done()) {
      const auto a = scripted_robot_action(s, scenario.dt, actions, noise, rng);
      const auto step = environment.step(a);
      demo.states.push_back(s.features());
      demo.rewards.push_back(step.reward);
      demo.reached_goal = step.termination == env::Termination::goal;
      s = step.next;
    }
    demos.push_back(std::move(demo));
  }
  return demos;
}

double initialize_from_demos(ValueNetwork& net, Optimizer& optimizer,
                             const std::vector<DemoEpisode>& demos, double discount,
                             const DemoTrainingConfig& config, std::mt19937_64& rng) {
  std::vector<Features> states;
  std::vector<double> targets;
  bool any_success = false;
  for (const auto& demo : demos) {
    any_success = any_success || demo.reached_goal;
    double ret = 0.0;
    std::vector<double> returns(demo.rewards.size());
    for (std::size_t t = demo.rewards.size(); t-- > 0;) {
      ret = demo.rewards[t] + discount * ret;
      returns[t] = ret;
    }
    states.insert(states.end(), demo.states.begin(), demo.states.end());
    targets.insert(targets.end(), returns.begin(), returns.end());
  }
  if (!any_success) throw InitializationFailed("no demonstration reached the goal");

  const Eigen::MatrixXd all_x = to_matrix(states);
  const Eigen::VectorXd all_y = Eigen::Map<const Eigen::VectorXd>(
      targets.data(), static_cast<Eigen::Index>(targets.size()));

  std::vector<Eigen::Index> order(targets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  const auto batch = static_cast<std::size_t>(std::max(1, config.batch_size));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      Eigen::MatrixXd x(all_x.rows(), static_cast<Eigen::Index>(n));
      Eigen::VectorXd y(static_cast<Eigen::Index>(n));
      for (std::size_t k = 0; k < n; ++k) {
        x.col(static_cast<Eigen::Index>(k)) = all_x.col(order[start + k]);
        y(static_cast<Eigen::Index>(k)) = all_y(order[start + k]);
      }
      train_value_network(net, optimizer, x, y);
    }
  }
  return net.loss(all_x, all_y);
}

}  // namespace dta::learners
