#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "dta/errors.hpp"
#include "dta/social_nav.hpp"

using namespace dta;
using namespace dta::env;

namespace {

double sampled_min_separation(Vec2 pr, Vec2 vr, Vec2 ph, Vec2 vh, double radii, double dt, int n) {
  double best = 1e300;
  for (int i = 0; i <= n; ++i) {
    const double tau = dt * i / n;
    best = std::min(best, ((pr + vr * tau) - (ph + vh * tau)).norm());
  }
  return best - radii;
}

JointState with_human(Vec2 human_pos, Vec2 human_vel, Vec2 robot_pos) {
  JointState j;
  j.human.position = human_pos;
  j.human.velocity = human_vel;
  j.robot.position = robot_pos;
  return j;
}

}  // namespace

TEST_CASE("social reward table") {
  CHECK(social_reward(-0.01, false) == -0.25);
  CHECK(social_reward(-0.01, true) == -0.25);
  CHECK(social_reward(0.1, false) == doctest::Approx(-0.15));
  CHECK(social_reward(0.1, true) == doctest::Approx(-0.15));
  CHECK(social_reward(0.2, true) == 1.0);
  CHECK(social_reward(0.5, false) == 0.0);
}

TEST_CASE("min separation examples") {
  CHECK(min_separation({0, 0}, {1, 0}, {2, 0}, {-1, 0}, 0.6, 1.0) == doctest::Approx(-0.6));
  CHECK(min_separation({0, 0}, {0.3, 0.3}, {1, 0}, {0.3, 0.3}, 0.6, 1.0) == doctest::Approx(0.4));
  CHECK_THROWS_AS(min_separation({0, 0}, {0, 0}, {1, 0}, {0, 0}, 0.6, 0.0), ContractViolation);
}

TEST_CASE("min separation vs dense sampling and symmetry") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> pos(-3, 3), vel(-2, 2), dtd(0.05, 1.0);
  for (int i = 0; i < 500; ++i) {
    const Vec2 pr{pos(rng), pos(rng)}, ph{pos(rng), pos(rng)};
    const Vec2 vr{vel(rng), vel(rng)}, vh{vel(rng), vel(rng)};
    const double dt = dtd(rng);
    const double closed = min_separation(pr, vr, ph, vh, 0.6, dt);
    CHECK(std::abs(closed - sampled_min_separation(pr, vr, ph, vh, 0.6, dt, 10000)) < 1e-4);
    CHECK(closed == doctest::Approx(min_separation(ph, vh, pr, vr, 0.6, dt)).epsilon(1e-12));
  }
}

TEST_CASE("behind predicate") {
  CHECK(behind_predicate(with_human({0, 0}, {1, 0}, {-1, 0}), 135, 225));
  CHECK_FALSE(behind_predicate(with_human({0, 0}, {1, 0}, {1, 0}), 135, 225));
  CHECK(behind_predicate(with_human({0, 0}, {1, 0}, {-1, 1}), 135, 225));
  CHECK(behind_predicate(with_human({0, 0}, {1, 0}, {-1, -1}), 135, 225));
  CHECK_FALSE(behind_predicate(with_human({0, 0}, {1, 0}, {-1, 1.01}), 135, 225));
  CHECK_FALSE(behind_predicate(with_human({0, 0}, {0, 0}, {-1, 0}), 135, 225));
}

TEST_CASE("behind predicate ignores translation and human speed") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-4, 4), k(0.1, 5);
  for (int i = 0; i < 2000; ++i) {
    const Vec2 h{u(rng), u(rng)}, r{u(rng), u(rng)}, v{u(rng), u(rng)}, shift{u(rng), u(rng)};
    const bool base = behind_predicate(with_human(h, v, r), 135, 225);
    CHECK(behind_predicate(with_human(h + shift, v, r + shift), 135, 225) == base);
    CHECK(behind_predicate(with_human(h, v * k(rng), r), 135, 225) == base);
  }
}

TEST_CASE("joint features") {
  JointState j;
  j.robot = {{1, 2}, {3, 4}, 0.3, {5, 6}, 1.0, 0.5};
  j.human = {{7, 8}, {9, 10}, 0.25};
  const auto f = j.features();
  CHECK(f.size() == 14);
  CHECK(f == std::array<double, 14>{1, 2, 3, 4, 0.3, 5, 6, 1.0, 0.5, 7, 8, 9, 10, 0.25});
}

TEST_CASE("wrap angle") {
  using std::numbers::pi;
  CHECK(wrap_angle(pi) == doctest::Approx(pi));
  CHECK(wrap_angle(-pi) == doctest::Approx(pi));
  CHECK(wrap_angle(3 * pi / 2) == doctest::Approx(-pi / 2));
  CHECK(wrap_angle(0.3) == doctest::Approx(0.3));
}

TEST_CASE("step: goal, collision, timeout") {
  SocialNavScenario s;
  s.human_noise_deg = 0.0;
  // human far away and parked at its goal
  s.human_start = s.human_goal = {10, 10};
  s.robot_start = {0, 0};
  s.robot_goal = {0.5, 0};
  SocialNavEnv env(s, 1);
  auto st = env.step({0.9, 0.0});
  CHECK(st.termination == Termination::goal);
  CHECK(st.reward == 1.0);
  CHECK(env.done());
  CHECK_THROWS_AS(env.step({0.0, 0.0}), ContractViolation);

  SocialNavScenario c;
  c.human_noise_deg = 0.0;
  c.robot_start = {0, 0};
  c.robot_goal = {5, 0};
  c.human_start = {0.8, 0};
  c.human_goal = {-5, 0};
  c.human_avoid_gain = 0.0;
  SocialNavEnv head_on(c, 1);
  st = head_on.step({0.9, 0.0});
  CHECK(st.termination == Termination::collision);
  CHECK(st.reward == -0.25);

  SocialNavScenario t;
  t.human_start = t.human_goal = {10, 10};
  t.robot_start = {0, 0};
  t.robot_goal = {5, 0};
  SocialNavEnv idle(t, 1);
  for (int i = 0; i < 24; ++i) CHECK(idle.step({0.0, 0.0}).termination == Termination::none);
  CHECK(idle.step({0.0, 0.0}).termination == Termination::timeout);
}

TEST_CASE("environment is deterministic per seed and noise varies runs") {
  SocialNavScenario s;
  SocialNavEnv a(s, 5), b(s, 5), c(s, 6);
  bool differs = false;
  for (int i = 0; i < 5; ++i) {
    const auto sa = a.step({0.0, 0.0});
    const auto sb = b.step({0.0, 0.0});
    const auto sc = c.step({0.0, 0.0});
    CHECK(sa.next == sb.next);
    differs = differs || !(sa.next == sc.next);
  }
  CHECK(differs);
}

TEST_CASE("collision is reported before goal") {
  SocialNavScenario s;
  s.human_noise_deg = 0.0;
  s.human_avoid_gain = 0.0;
  s.robot_start = {0, 0};
  s.robot_goal = {0.2, 0};
  s.human_start = {0.5, 0};
  s.human_goal = {-5, 0};
  SocialNavEnv env(s, 3);
  const auto st = env.step({0.8, 0.0});
  CHECK(st.termination == Termination::collision);
  CHECK(st.reward == -0.25);
}

TEST_CASE("scenario parsing") {
  std::istringstream text("robot_start = 0,0\nsubgoal = behind 120 240\nmax_steps = 30\n");
  const auto s = parse_social_nav(KeyValueFile::parse(text, "s"));
  CHECK(s.robot_start == Vec2{0, 0});
  CHECK(s.max_steps == 30);
  REQUIRE(s.subgoals.size() == 1);
  CHECK(s.subgoals[0].deg_min == 120);
  std::istringstream bad("subgoal = ahead 1 2\n");
  CHECK_THROWS_AS(parse_social_nav(KeyValueFile::parse(bad, "s")), ConfigError);
  std::istringstream radius("robot_radius = -1\n");
  CHECK_THROWS_AS(parse_social_nav(KeyValueFile::parse(radius, "s")), ConfigError);
}

TEST_CASE("trajectory dump schema") {
  std::ostringstream out;
  write_trajectory_header(out);
  write_trajectory_row(out, {2, 3, SocialNavScenario{}.initial_state(), -0.25, 1, true});
  const std::string text = out.str();
  CHECK(text.rfind("episode,step,robot_px", 0) == 0);
  CHECK(text.find("\n2,3,-1.000000,-1.000000,") != std::string::npos);
  CHECK(text.substr(text.size() - 5) == ",1,1\n");
}
