#pragma once

// Synthetic ground truth and sensor streams for robustness experiments.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "amcckf/fusion.hpp"

namespace amcckf {

enum class TrajectoryKind { kHover, kWaypoint, kFigureEight };

TrajectoryKind parse_trajectory(const std::string& name);

/// Corruption model for one odometry channel set, ordered (p, theta, v).
struct NoiseSpec {
  Vector9 gaussian_std = Vector9::Zero();
  double jump_probability = 0.0;
  double jump_magnitude = 50.0;  // in units of gaussian_std
  int jump_duration = 1;         // samples a jump is held for
  Vector9 drift_rate = Vector9::Zero();  // per second while the episode lasts;
                                         // the position part also biases velocity
  double drift_start = 0.0;              // seconds
  int drift_steps = 0;                   // 0: drift never ends
  std::uint64_t seed = 0;                // mixed with the scenario seed
};

struct OdometrySensorSpec {
  std::string id;
  double rate = 50.0;  // Hz, must divide the IMU rate
  NoiseSpec noise;
};

struct ImuNoiseSpec {
  double accel_std = 0.05;  // m/s^2 per sample
  double gyro_std = 0.005;  // rad/s per sample
};

struct ScenarioSpec {
  TrajectoryKind kind = TrajectoryKind::kFigureEight;
  double duration = 60.0;
  double imu_rate = 200.0;
  std::vector<Vector3> waypoints;  // waypoint traverse only
  std::vector<OdometrySensorSpec> sensors;
  ImuNoiseSpec imu_noise;
  Vector3 gravity{0.0, 0.0, -9.81};
  std::uint64_t seed = 1;

  void validate() const;
};

/// Kinematic quantities of the truth trajectory at one instant.
struct TruthPoint {
  Nominal state;
  Vector3 accel_world = Vector3::Zero();
  Vector3 omega_body = Vector3::Zero();
};

TruthPoint evaluate_truth(const ScenarioSpec& spec, double t);

/// Truth sampled at the IMU rate, t_k = k / imu_rate for k = 0..N.
std::vector<Nominal> generate_truth(const ScenarioSpec& spec);

struct SensorStream {
  std::vector<Event> events;  // timestamp ordered, IMU before odometry on ties
  std::map<std::string, std::size_t> jump_onsets;
};

SensorStream sample_sensors(const std::vector<Nominal>& truth,
                            const ScenarioSpec& spec);

/// Named scenarios: hover, waypoint, figure-eight, jumps, divergence.
ScenarioSpec make_scenario(const std::string& name, std::uint64_t seed);

}  // namespace amcckf
