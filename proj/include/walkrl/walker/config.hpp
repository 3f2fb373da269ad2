#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "walkrl/errors.hpp"

namespace walkrl::walker {

// Every physical and reward constant of the planar walker. Field names double
// as the keys of the [physics] config section.
struct PhysicsConfig {
  // integration
  double dt = 0.02;
  double gravity = 9.8;
  int substeps = 4;
  int solver_iterations = 60;  // cap; stops early once impulses settle
  double solver_tolerance = 1e-12;

  // bodies
  double hull_mass = 7.25;
  double hull_width = 0.65;
  double hull_height = 0.24;
  double hull_inertia = 1.8;  // about the hull center; 0 means a uniform box
  double hip_offset = 0.07;  // hips sit this far below the hull center
  double thigh_mass = 0.25;
  double thigh_length = 0.67;
  double shank_mass = 0.5;
  double shank_length = 0.51;

  // actuation: servo toward sign(a) * speed with torque limited to |a| * motor_torque
  double motor_torque = 44.0;
  double hip_speed = 4.7;
  double knee_speed = 2.6;

  // joint limits (rad)
  double hip_min = -0.8;
  double hip_max = 1.1;
  double knee_min = -1.6;
  double knee_max = -0.1;

  // contact
  double friction = 0.9;
  double contact_tolerance = 1e-3;

  // terrain
  double terrain_spacing = 0.5;
  double terrain_max_slope = 0.3;
  double terrain_amplitude = 0.15;
  double spawn_pad = 3.0;
  double course_length = 30.0;

  // reward
  double finish_reward = 300.0;
  double torque_cost = 0.0035;
  double fall_penalty = 100.0;
  double tip_over_angle = 1.0;

  // sensing
  double lidar_range = 10.0;
  double lidar_fan_degrees = 60.0;

  // reset pose (rad)
  double stance_hip_front = 0.87;
  double stance_hip_rear = 0.12;
  double stance_knee = -1.03;

  // episode
  double initial_push = 0.1;  // max |initial hull x-velocity|, drawn per seed
  std::size_t max_episode_steps = 1600;

  double progress_scale() const { return finish_reward / course_length; }
  double substep() const { return dt / substeps; }

  void validate() const {
    auto positive = [](double x, const char* name) {
      if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(std::string("physics: ") + name + " must be > 0");
    };
    auto non_negative = [](double x, const char* name) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError(std::string("physics: ") + name + " must be >= 0");
    };
    positive(dt, "dt");
    non_negative(gravity, "gravity");
    if (substeps < 1) throw ConfigError("physics: substeps must be >= 1");
    if (solver_iterations < 1) throw ConfigError("physics: solver_iterations must be >= 1");
    non_negative(solver_tolerance, "solver_tolerance");
    positive(hull_mass, "hull_mass");
    positive(hull_width, "hull_width");
    positive(hull_height, "hull_height");
    non_negative(hull_inertia, "hull_inertia");
    non_negative(hip_offset, "hip_offset");
    positive(thigh_mass, "thigh_mass");
    positive(thigh_length, "thigh_length");
    positive(shank_mass, "shank_mass");
    positive(shank_length, "shank_length");
    non_negative(motor_torque, "motor_torque");
    positive(hip_speed, "hip_speed");
    positive(knee_speed, "knee_speed");
    if (!(hip_min < hip_max)) throw ConfigError("physics: constraint hip_min < hip_max violated");
    if (!(knee_min < knee_max)) throw ConfigError("physics: constraint knee_min < knee_max violated");
    non_negative(friction, "friction");
    non_negative(contact_tolerance, "contact_tolerance");
    positive(terrain_spacing, "terrain_spacing");
    non_negative(terrain_max_slope, "terrain_max_slope");
    non_negative(terrain_amplitude, "terrain_amplitude");
    non_negative(spawn_pad, "spawn_pad");
    positive(course_length, "course_length");
    non_negative(finish_reward, "finish_reward");
    non_negative(torque_cost, "torque_cost");
    non_negative(fall_penalty, "fall_penalty");
    positive(tip_over_angle, "tip_over_angle");
    positive(lidar_range, "lidar_range");
    positive(lidar_fan_degrees, "lidar_fan_degrees");
    if (!(stance_hip_front >= hip_min && stance_hip_front <= hip_max && stance_hip_rear >= hip_min &&
          stance_hip_rear <= hip_max)) {
      throw ConfigError("physics: stance hip angles must lie inside the hip limits");
    }
    if (!(stance_knee >= knee_min && stance_knee <= knee_max)) {
      throw ConfigError("physics: stance_knee must lie inside the knee limits");
    }
    non_negative(initial_push, "initial_push");
    if (max_episode_steps < 1) throw ConfigError("physics: max_episode_steps must be >= 1");
  }
};

}  // namespace walkrl::walker
