#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dta/cadrl.hpp"
#include "dta/errors.hpp"

using namespace dta;
using namespace dta::learners;
using env::AgentState;
using env::Vec2;

namespace {

ValueNetwork zero_net() {
  ValueNetwork::Layer l{Eigen::MatrixXd::Zero(1, env::kJointFeatureSize), Eigen::VectorXd::Zero(1)};
  return ValueNetwork({l});
}

// V(s') = weight * (robot x position)
ValueNetwork linear_x_net(double weight) {
  ValueNetwork::Layer l{Eigen::MatrixXd::Zero(1, env::kJointFeatureSize), Eigen::VectorXd::Zero(1)};
  l.weight(0, 0) = weight;
  return ValueNetwork({l});
}

JointState open_field() {
  JointState j;
  j.robot.position = {0, 0};
  j.robot.goal = {10, 0};
  j.robot.heading = 0.0;
  j.human.position = {0, 10};
  return j;
}

}  // namespace

TEST_CASE("default action set") {
  AgentState robot;
  robot.heading = 0.3;
  const auto actions = build_action_set(robot, 0.25, {});
  REQUIRE(actions.size() == 16);
  CHECK(actions.front().speed == 0.0);
  for (std::size_t i = 1; i < actions.size(); ++i) {
    CHECK(actions[i].speed > 0.0);
    CHECK(actions[i].speed < robot.v_pref);
    CHECK(admissible(robot, actions[i], 0.25));
  }
  // with a generous turn budget every sampled heading survives
  const auto wide = build_action_set(robot, 1.0, {});
  CHECK(wide.size() == 1 + 5 * 7);
}

TEST_CASE("selected actions always satisfy the constraints") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-3, 3), ang(-3.14, 3.14), dt(0.1, 1.0), vp(0.5, 2.0);
  std::mt19937_64 init(1);
  ValueNetwork net({env::kJointFeatureSize, 8, 1}, init);
  for (int i = 0; i < 300; ++i) {
    JointState j;
    j.robot.position = {u(rng), u(rng)};
    j.robot.goal = {u(rng), u(rng)};
    j.robot.heading = ang(rng);
    j.robot.v_pref = vp(rng);
    j.human.position = {u(rng), u(rng)};
    j.human.velocity = {u(rng) / 3, u(rng) / 3};
    const double step = dt(rng);
    const auto actions = build_action_set(j.robot, step, {});
    const auto sel = cadrl_select_action(j, net, actions, step, step_discount(0.9, step, j.robot.v_pref));
    CHECK(admissible(j.robot, sel.action, step));
  }
}

TEST_CASE("lookahead selection") {
  const JointState j = open_field();
  const auto net = zero_net();
  std::vector<VelocityCommand> one{{0.5, 0.0}};
  CHECK(cadrl_select_action(j, net, one, 0.25, 0.9).action == one[0]);

  // collision-bound action loses to a free one
  JointState near = open_field();
  near.human.position = {1.0, 0};
  near.human.velocity = {-1.0, 0};
  std::vector<VelocityCommand> two{{0.8, 0.0}, {0.8, std::numbers::pi}};
  const auto sel = cadrl_select_action(near, net, two, 0.25, 0.9);
  CHECK(sel.index == 1);
  CHECK(sel.score == 0.0);

  // zero network: ties resolve to the lowest index
  const auto all = build_action_set(j.robot, 0.25, {});
  CHECK(cadrl_select_action(j, net, all, 0.25, 0.9).index == 0);

  // value favouring progress along x picks the fastest straight command
  const auto fast = cadrl_select_action(j, linear_x_net(1.0), all, 0.25, 0.9);
  CHECK(fast.action.speed == doctest::Approx(5.0 / 6.0));
  CHECK(fast.action.heading == doctest::Approx(0.0));

  const auto fallback = cadrl_select_action(j, net, std::vector<VelocityCommand>{}, 0.25, 0.9);
  CHECK(fallback.index == -1);
  CHECK(fallback.action.speed == 0.0);
}

TEST_CASE("step discount") {
  CHECK(step_discount(0.9, 0.25, 1.0) == doctest::Approx(std::pow(0.9, 0.25)));
  CHECK(step_discount(0.9, 1.0, 1.0) == doctest::Approx(0.9));
}

TEST_CASE("replay buffer is a bounded FIFO") {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) buf.push({{}, static_cast<double>(i), {}, false});
  CHECK(buf.size() == 3);
  std::mt19937_64 rng(1);
  for (const auto* t : buf.sample(50, rng)) CHECK(t->reward >= 2.0);
  ReplayBuffer none(0);
  none.push({});
  CHECK(none.size() == 0);
}

TEST_CASE("demo returns and initialization") {
  // one demo: rewards 0, 0, 1 (goal)
  DemoEpisode demo;
  for (int i = 0; i < 3; ++i) {
    Features f{};
    f[0] = i;
    demo.states.push_back(f);
  }
  demo.rewards = {0.0, 0.0, 1.0};
  demo.reached_goal = true;
  std::mt19937_64 rng(3);
  ValueNetwork net({env::kJointFeatureSize, 16, 1}, rng);
  Optimizer opt({OptimizerConfig::Kind::adam, 0.01}, net.num_parameters());
  const double loss = initialize_from_demos(net, opt, {demo}, 0.9, {3000, 3}, rng);
  CHECK(loss < 1e-4);
  std::vector<double> x(env::kJointFeatureSize, 0.0);
  x[0] = 2;
  CHECK(net.forward(x) == doctest::Approx(1.0).epsilon(0.02));
  x[0] = 0;
  CHECK(net.forward(x) == doctest::Approx(0.81).epsilon(0.02));

  DemoEpisode failed = demo;
  failed.reached_goal = false;
  CHECK_THROWS_AS(initialize_from_demos(net, opt, {failed}, 0.9, {1, 3}, rng), InitializationFailed);
}

TEST_CASE("all-zero demos regress toward zero") {
  DemoEpisode demo;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    Features f{};
    for (auto& v : f) v = n01(rng);
    demo.states.push_back(f);
    demo.rewards.push_back(0.0);
  }
  demo.reached_goal = true;
  ValueNetwork net({env::kJointFeatureSize, 8, 1}, rng);
  Optimizer opt({OptimizerConfig::Kind::adam, 0.01}, net.num_parameters());
  CHECK(initialize_from_demos(net, opt, {demo}, 0.9, {500, 8}, rng) < 1e-4);
}

TEST_CASE("scripted demonstrator reaches the goal in the default scenario") {
  env::SocialNavScenario s;
  const auto demos = generate_demos(s, 50, {}, 0.0, 7);
  int success = 0;
  for (const auto& d : demos) {
    success += d.reached_goal ? 1 : 0;
    CHECK(d.states.size() == d.rewards.size());
    CHECK(d.states.size() <= 25);
  }
  CHECK(success > 0);
  const auto again = generate_demos(s, 50, {}, 0.0, 7);
  CHECK(again[3].rewards == demos[3].rewards);
}
