#include "dta/social_nav.hpp"

#include <algorithm>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dta/errors.hpp"

namespace dta::env {

namespace {

constexpr double kPi = std::numbers::pi;

Vec2 unit(Vec2 v) {
  const double n = v.norm();
  return n > 0.0 ? v * (1.0 / n) : Vec2{};
}

Vec2 rotate(Vec2 v, double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

}  // namespace

double wrap_angle(double radians) {
  double a = std::remainder(radians, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

std::array<double, kJointFeatureSize> JointState::features() const {
  return {robot.position.x, robot.position.y, robot.velocity.x, robot.velocity.y,
          robot.radius,     robot.goal.x,     robot.goal.y,     robot.v_pref,
          robot.heading,    human.position.x, human.position.y, human.velocity.x,
          human.velocity.y, human.radius};
}

double min_separation(Vec2 p_r, Vec2 v_r, Vec2 p_h, Vec2 v_h, double radii_sum, double dt) {
  if (!(dt > 0.0)) throw ContractViolation("dt must be positive");
  const Vec2 d = p_r - p_h;
  const Vec2 w = v_r - v_h;
  const double ww = w.dot(w);
  double tau = 0.0;
  if (ww > 0.0) tau = std::clamp(-d.dot(w) / ww, 0.0, dt);
  return (d + w * tau).norm() - radii_sum;
}

double social_reward(double d_min, bool reached_goal) {
  if (d_min < 0.0) return -0.25;
  if (d_min < 0.2) return -0.1 - d_min / 2.0;
  if (reached_goal) return 1.0;
  return 0.0;
}

bool at_goal(const AgentState& robot) {
  return (robot.position - robot.goal).norm() <= robot.radius;
}

AgentState propagate_robot(const AgentState& robot, const VelocityCommand& action, double dt) {
  AgentState next = robot;
  next.velocity = action.velocity();
  next.position = robot.position + next.velocity * dt;
  if (action.speed > 0.0) next.heading = wrap_angle(action.heading);
  return next;
}

JointState propagate_joint(const JointState& joint, const VelocityCommand& action, double dt) {
  JointState next = joint;
  next.robot = propagate_robot(joint.robot, action, dt);
  next.human.position = joint.human.position + joint.human.velocity * dt;
  return next;
}

double social_reward(const JointState& joint, const VelocityCommand& action, double dt) {
  const Vec2 v_r = action.velocity();
  const double d_min = min_separation(joint.robot.position, v_r, joint.human.position,
                                      joint.human.velocity,
                                      joint.robot.radius + joint.human.radius, dt);
  return social_reward(d_min, at_goal(propagate_robot(joint.robot, action, dt)));
}

bool behind_predicate(const JointState& joint, double deg_min, double deg_max) {
  const Vec2 v = joint.human.velocity;
  if (v.norm() == 0.0) return false;
  const Vec2 rel = joint.robot.position - joint.human.position;
  double deg = std::atan2(v.cross(rel), v.dot(rel)) * 180.0 / kPi;
  if (deg < 0.0) deg += 360.0;
  constexpr double kSlack = 1e-9;
  return deg >= deg_min - kSlack && deg <= deg_max + kSlack;
}

void SocialNavScenario::validate() const {
  if (!(dt > 0.0)) throw ContractViolation("dt must be positive");
  if (max_steps <= 0) throw ContractViolation("max_steps must be positive");
  if (!(robot_radius > 0.0 && human_radius > 0.0)) throw ContractViolation("radii must be positive");
  if (!(robot_v_pref > 0.0 && human_v_pref > 0.0))
    throw ContractViolation("preferred speeds must be positive");
  for (const auto& sg : subgoals) {
    if (sg.type != "behind") throw ContractViolation("unknown subgoal type '" + sg.type + "'");
    if (!(sg.deg_min <= sg.deg_max)) throw ContractViolation("subgoal window is empty");
  }
}

JointState SocialNavScenario::initial_state() const {
  JointState j;
  j.robot.position = robot_start;
  j.robot.goal = robot_goal;
  j.robot.radius = robot_radius;
  j.robot.v_pref = robot_v_pref;
  const Vec2 to_goal = robot_goal - robot_start;
  j.robot.heading = wrap_angle(std::atan2(to_goal.y, to_goal.x));
  j.human.position = human_start;
  j.human.radius = human_radius;
  return j;
}

SocialNavScenario parse_social_nav(const KeyValueFile& file) {
  SocialNavScenario s;
  auto vec = [&](const char* key, Vec2 fallback) {
    auto p = file.get_pair(key, {fallback.x, fallback.y});
    return Vec2{p.first, p.second};
  };
  s.robot_start = vec("robot_start", s.robot_start);
  s.robot_goal = vec("robot_goal", s.robot_goal);
  s.human_start = vec("human_start", s.human_start);
  s.human_goal = vec("human_goal", s.human_goal);
  s.dt = file.get_double("dt", s.dt);
  s.max_steps = file.get_int("max_steps", s.max_steps);
  s.robot_radius = file.get_double("robot_radius", s.robot_radius);
  s.human_radius = file.get_double("human_radius", s.human_radius);
  s.robot_v_pref = file.get_double("robot_v_pref", s.robot_v_pref);
  s.human_v_pref = file.get_double("human_v_pref", s.human_v_pref);
  s.human_noise_deg = file.get_double("human_noise_deg", s.human_noise_deg);
  s.human_avoid_gain = file.get_double("human_avoid_gain", s.human_avoid_gain);
  const auto subgoals = file.all("subgoal");
  if (!subgoals.empty()) {
    s.subgoals.clear();
    for (const auto& e : subgoals) {
      std::istringstream fields(e.value);
      SubgoalSpec sg;
      if (!(fields >> sg.type >> sg.deg_min >> sg.deg_max))
        file.fail(e, "expected '<type> <deg_min> <deg_max>'");
      if (sg.type != "behind") file.fail(e, "unknown subgoal type '" + sg.type + "'");
      s.subgoals.push_back(sg);
    }
  }
  try {
    s.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(file.source(), 0, e.what());
  }
  return s;
}

std::vector<shaping::Predicate<JointState>> social_subgoal_predicates(
    const SocialNavScenario& scenario) {
  std::vector<shaping::Predicate<JointState>> out;
  for (const auto& sg : scenario.subgoals) {
    const double lo = sg.deg_min;
    const double hi = sg.deg_max;
    out.emplace_back([lo, hi](const JointState& j) { return behind_predicate(j, lo, hi); });
  }
  return out;
}

Vec2 scripted_human_velocity(const SocialNavScenario& scenario, const AgentState& human,
                             const AgentState& robot, std::mt19937_64& rng) {
  const Vec2 to_goal = human.goal - human.position;
  const double remaining = to_goal.norm();
  if (remaining < 1e-9) return {};
  Vec2 dir = unit(to_goal);

  const Vec2 away = human.position - robot.position;
  if (away.norm() < 2.0 * (robot.radius + human.radius)) {
    // Sidestep perpendicular to the walking direction, on the side away from the robot.
    Vec2 perp{-dir.y, dir.x};
    if (perp.dot(away) < 0.0) perp = perp * -1.0;
    dir = unit(dir + perp * scenario.human_avoid_gain);
  }
  if (scenario.human_noise_deg > 0.0) {
    std::normal_distribution<double> noise(0.0, scenario.human_noise_deg * kPi / 180.0);
    dir = rotate(dir, noise(rng));
  }
  const double speed = std::min(human.v_pref, remaining / scenario.dt);
  return dir * speed;
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::none: return "none";
    case Termination::goal: return "goal";
    case Termination::collision: return "collision";
    case Termination::timeout: return "timeout";
  }
  return "?";
}

SocialNavEnv::SocialNavEnv(SocialNavScenario scenario, std::uint64_t seed)
    : scenario_(std::move(scenario)), rng_(seed) {
  scenario_.validate();
  reset();
}

const JointState& SocialNavEnv::reset() {
  joint_ = scenario_.initial_state();
  human_ = AgentState{};
  human_.position = scenario_.human_start;
  human_.goal = scenario_.human_goal;
  human_.radius = scenario_.human_radius;
  human_.v_pref = scenario_.human_v_pref;
  const Vec2 to_goal = scenario_.human_goal - scenario_.human_start;
  human_.heading = wrap_angle(std::atan2(to_goal.y, to_goal.x));
  // The human's first observed velocity is its plan, so the robot can see it.
  human_.velocity = to_goal.norm() > 0.0 ? unit(to_goal) * human_.v_pref : Vec2{};
  joint_.human = human_.observable();
  steps_ = 0;
  done_ = false;
  return joint_;
}

SocialStep SocialNavEnv::step(const VelocityCommand& action) {
  if (done_) throw ContractViolation("step on a finished episode");
  const double dt = scenario_.dt;
  const Vec2 v_h = scripted_human_velocity(scenario_, human_, joint_.robot, rng_);
  const Vec2 v_r = action.velocity();

  SocialStep out;
  out.d_min = min_separation(joint_.robot.position, v_r, human_.position, v_h,
                             joint_.robot.radius + human_.radius, dt);

  joint_.robot = propagate_robot(joint_.robot, action, dt);
  human_.velocity = v_h;
  human_.position = human_.position + v_h * dt;
  if (v_h.norm() > 0.0) human_.heading = std::atan2(v_h.y, v_h.x);
  joint_.human = human_.observable();
  ++steps_;

  const bool reached = at_goal(joint_.robot);
  out.reward = social_reward(out.d_min, reached);
  if (out.d_min < 0.0) {
    out.termination = Termination::collision;
  } else if (reached) {
    out.termination = Termination::goal;
  } else if (steps_ >= scenario_.max_steps) {
    out.termination = Termination::timeout;
  }
  done_ = out.termination != Termination::none;
  out.next = joint_;
  return out;
}

void write_trajectory_header(std::ostream& out) {
  out << "episode,step,robot_px,robot_py,robot_vx,robot_vy,robot_heading,"
         "human_px,human_py,human_vx,human_vy,reward,abstract_state,subgoal_achieved\n";
}

void write_trajectory_row(std::ostream& out, const TrajectoryRow& row) {
  const auto& r = row.state.robot;
  const auto& h = row.state.human;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%d\n",
                row.episode, row.step, r.position.x, r.position.y, r.velocity.x, r.velocity.y,
                r.heading, h.position.x, h.position.y, h.velocity.x, h.velocity.y, row.reward,
                row.abstract_state, row.subgoal_achieved ? 1 : 0);
  out << buf;
}

}  // namespace dta::env
