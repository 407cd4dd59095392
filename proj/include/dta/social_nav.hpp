#pragma once

#include <array>
#include <cmath>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "dta/config.hpp"
#include "dta/shaping.hpp"

namespace dta::env {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  friend bool operator==(Vec2, Vec2) = default;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double radians);

/// Observable part of an agent: position, velocity, radius.
struct ObservableState {
  Vec2 position;
  Vec2 velocity;
  double radius = 0.3;
  friend bool operator==(const ObservableState&, const ObservableState&) = default;
};

/// Full agent state: observable part plus goal, preferred speed and heading.
struct AgentState {
  Vec2 position;
  Vec2 velocity;
  double radius = 0.3;
  Vec2 goal;
  double v_pref = 1.0;
  double heading = 0.0;

  ObservableState observable() const { return {position, velocity, radius}; }
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

inline constexpr int kJointFeatureSize = 14;

/// Robot full state plus the human's observable state.
struct JointState {
  AgentState robot;
  ObservableState human;

  /// [px, py, vx, vy, r, gx, gy, v_pref, heading] ++ [hpx, hpy, hvx, hvy, hr].
  std::array<double, kJointFeatureSize> features() const;
  friend bool operator==(const JointState&, const JointState&) = default;
};

/// Robot action a = [v_s, phi]: speed and absolute heading.
struct VelocityCommand {
  double speed = 0.0;
  double heading = 0.0;

  Vec2 velocity() const { return {speed * std::cos(heading), speed * std::sin(heading)}; }
  friend bool operator==(const VelocityCommand&, const VelocityCommand&) = default;
};

/// Minimum over tau in [0, dt] of |(p_r + tau v_r) - (p_h + tau v_h)| minus
/// `radii_sum`. Negative means the discs overlap during the interval.
double min_separation(Vec2 p_r, Vec2 v_r, Vec2 p_h, Vec2 v_h, double radii_sum, double dt);

/// Reward by priority: -0.25 if d_min < 0; -0.1 - d_min/2 if d_min < 0.2;
/// 1 if at the goal; else 0.
double social_reward(double d_min, bool at_goal);

/// Reward of commanding `action` from `joint` for dt, with the human assumed
/// to keep its current velocity.
double social_reward(const JointState& joint, const VelocityCommand& action, double dt);

/// |p - p_g| <= robot radius.
bool at_goal(const AgentState& robot);

/// Angle (degrees, [0, 360)) between the human->robot vector and the human
/// velocity lies in [deg_min, deg_max]. False when the human is stationary.
bool behind_predicate(const JointState& joint, double deg_min, double deg_max);

/// Robot state after moving with `action` for dt. A zero-speed command keeps
/// the heading.
AgentState propagate_robot(const AgentState& robot, const VelocityCommand& action, double dt);

/// Joint state one step ahead: robot moved by `action`, human moved linearly
/// at its current velocity.
JointState propagate_joint(const JointState& joint, const VelocityCommand& action, double dt);

struct SubgoalSpec {
  std::string type = "behind";
  double deg_min = 135.0;
  double deg_max = 225.0;
};

struct SocialNavScenario {
  Vec2 robot_start{-1.0, -1.0};
  Vec2 robot_goal{1.0, 1.0};
  Vec2 human_start{1.0, -1.0};
  Vec2 human_goal{-1.0, 1.0};
  double dt = 0.25;
  int max_steps = 25;
  double robot_radius = 0.3;
  double human_radius = 0.3;
  double robot_v_pref = 1.0;
  double human_v_pref = 1.0;
  /// Std-dev of the human's per-step heading perturbation.
  double human_noise_deg = 10.0;
  /// Weight of the sideways dodge relative to the goal direction.
  double human_avoid_gain = 0.5;
  std::vector<SubgoalSpec> subgoals{SubgoalSpec{}};

  void validate() const;
  JointState initial_state() const;
};

SocialNavScenario parse_social_nav(const KeyValueFile& file);

std::vector<shaping::Predicate<JointState>> social_subgoal_predicates(
    const SocialNavScenario& scenario);

/// Scripted human: straight to its goal at v_pref, with a perpendicular dodge
/// away from the robot when closer than 2 (r_r + r_h), plus Gaussian heading
/// noise. Stops at its goal.
Vec2 scripted_human_velocity(const SocialNavScenario& scenario, const AgentState& human,
                             const AgentState& robot, std::mt19937_64& rng);

enum class Termination { none, goal, collision, timeout };
const char* to_string(Termination t);

struct SocialStep {
  JointState next;
  double reward = 0.0;
  double d_min = 0.0;
  Termination termination = Termination::none;
};

/// One robot and one scripted human. Collision is checked before the goal;
/// the episode times out after `max_steps` non-terminal steps.
class SocialNavEnv {
 public:
  SocialNavEnv(SocialNavScenario scenario, std::uint64_t seed);

  const JointState& reset();
  SocialStep step(const VelocityCommand& action);

  const JointState& state() const { return joint_; }
  const AgentState& human() const { return human_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }
  const SocialNavScenario& scenario() const { return scenario_; }

 private:
  SocialNavScenario scenario_;
  std::mt19937_64 rng_;
  AgentState human_;
  JointState joint_;
  int steps_ = 0;
  bool done_ = false;
};

/// Free function form of SocialNavEnv::step.
inline SocialStep step_social(SocialNavEnv& env, const VelocityCommand& action) {
  return env.step(action);
}

/// One row per step of the trajectory dump.
struct TrajectoryRow {
  int episode = 0;
  int step = 0;
  JointState state;  // post-step
  double reward = 0.0;
  int abstract_state = 0;
  bool subgoal_achieved = false;
};

void write_trajectory_header(std::ostream& out);
void write_trajectory_row(std::ostream& out, const TrajectoryRow& row);

}  // namespace dta::env
