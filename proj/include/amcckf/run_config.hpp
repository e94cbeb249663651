#pragma once

// Experiment configuration: a key = value text file, '#' starts a comment.
//
//   filter      = vb-amcckf        # ekf | akf | mcckf | r-amcckf | vb-amcckf
//   window      = 10
//   rho         = 0.97
//   bandwidth   = adaptive         # adaptive | <static value>
//   sigma_min   = 1e-3
//   sigma_max   = 1e6
//   r0          = 0.01             # scalar multiple of I9, every sensor
//   r0.vio_left = 0.02             # per-sensor override
//   q0          = 1e-8
//   p0          = 1e-2
//   beta        = 1
//   adapt_q     = true
//   q_floor     = 1e-8             # smallest eigenvalue of an adapted Q
//   diagonal_r  = true             # per-channel R estimates
//   diagonal_q  = true             # per-channel Q estimates (residual scheme)
//   q_gamma     = innovation       # innovation | residual
//   seed        = 1
//   scenario    = figure-eight     # or: dataset = path.csv (+ truth = path.csv)
//   out         = out
//
// Scenario overrides: duration, imu_rate, odom_rate, jump_probability,
// jump_magnitude, jump_duration.

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "amcckf/fusion.hpp"
#include "amcckf/sim_harness.hpp"

namespace amcckf {

struct RunConfig {
  FilterVariant filter = FilterVariant::kVbAmcckf;
  int window = 10;
  double rho = 0.97;
  bool adaptive_bandwidth = true;
  double static_bandwidth = 2.0;
  double sigma_min = 1e-3;
  double sigma_max = 1e6;
  double r0 = 0.01;
  std::map<std::string, double> r0_per_sensor;
  double q0 = 1e-8;
  double p0 = 1e-2;
  double q_floor = 1e-8;
  double beta = 1.0;
  bool adapt_q = true;
  bool diagonal_r = true;
  bool diagonal_q = true;
  GammaSource q_gamma = GammaSource::kInnovation;
  std::uint64_t seed = 1;

  std::string scenario = "figure-eight";
  std::string dataset;
  std::string truth;
  std::string out = "out";

  std::optional<double> duration;
  std::optional<double> imu_rate;
  std::optional<double> odom_rate;
  std::optional<double> jump_probability;
  std::optional<double> jump_magnitude;
  std::optional<int> jump_duration;

  /// Applies one key = value pair. Throws ValidationError naming the key.
  void set(const std::string& key, const std::string& value);

  /// Throws ValidationError naming the first offending field.
  void validate() const;
};

RunConfig load_run_config(const std::string& path, RunConfig base = {});

FusionConfig make_fusion_config(const RunConfig& rc,
                                const std::vector<std::string>& sensor_ids);

ScenarioSpec make_scenario_spec(const RunConfig& rc);

}  // namespace amcckf
