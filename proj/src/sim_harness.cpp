#include "amcckf/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace amcckf {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFigureEightPeriod = 30.0;

Eigen::Quaterniond yaw_roll(double yaw, double roll) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vector3::UnitZ())) *
         Eigen::Quaterniond(Eigen::AngleAxisd(roll, Vector3::UnitX()));
}

// Body rates of q = Rz(yaw) * Rx(roll).
Vector3 yaw_roll_rate(double roll, double yaw_dot, double roll_dot) {
  const Eigen::Matrix3d Rx = Eigen::AngleAxisd(roll, Vector3::UnitX()).toRotationMatrix();
  return Rx.transpose() * Vector3(0.0, 0.0, yaw_dot) + Vector3(roll_dot, 0.0, 0.0);
}

// Minimum-jerk profile s(tau) on [0, 1] and its first two derivatives.
void min_jerk(double tau, double& s, double& ds, double& dds) {
  const double t2 = tau * tau;
  const double t3 = t2 * tau;
  s = 10.0 * t3 - 15.0 * t3 * tau + 6.0 * t3 * t2;
  ds = 30.0 * t2 - 60.0 * t3 + 30.0 * t3 * tau;
  dds = 60.0 * tau - 180.0 * t2 + 120.0 * t3;
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(salt),
                    static_cast<std::uint32_t>(salt >> 32)};
  return std::mt19937_64(seq);
}

Eigen::Quaterniond canonical(Eigen::Quaterniond q) {
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

std::size_t sample_count(const ScenarioSpec& spec) {
  return static_cast<std::size_t>(std::llround(spec.duration * spec.imu_rate)) + 1;
}

}  // namespace

TrajectoryKind parse_trajectory(const std::string& name) {
  if (name == "hover") return TrajectoryKind::kHover;
  if (name == "waypoint") return TrajectoryKind::kWaypoint;
  if (name == "figure-eight") return TrajectoryKind::kFigureEight;
  throw ValidationError("scenario: unknown trajectory '" + name + "'");
}

void ScenarioSpec::validate() const {
  if (!(duration > 0.0)) throw ValidationError("duration: must be positive");
  if (!(imu_rate > 0.0)) throw ValidationError("imu_rate: must be positive");
  if (kind == TrajectoryKind::kWaypoint && waypoints.size() < 2) {
    throw ValidationError("waypoints: a traverse needs at least two waypoints");
  }
  for (const auto& s : sensors) {
    if (!(s.rate > 0.0)) throw ValidationError("odom_rate: must be positive");
    const double stride = imu_rate / s.rate;
    if (std::abs(stride - std::round(stride)) > 1e-9 || stride < 1.0) {
      throw ValidationError("odom_rate: must divide imu_rate");
    }
    const auto& n = s.noise;
    if (n.jump_probability < 0.0 || n.jump_probability > 1.0) {
      throw ValidationError("jump_probability: must lie in [0, 1]");
    }
    if ((n.gaussian_std.array() < 0.0).any()) {
      throw ValidationError("noise: standard deviations must be non-negative");
    }
    if (n.jump_duration < 1) throw ValidationError("jump_duration: must be >= 1");
  }
}

TruthPoint evaluate_truth(const ScenarioSpec& spec, double t) {
  TruthPoint out;
  out.state.time = t;
  switch (spec.kind) {
    case TrajectoryKind::kHover: {
      out.state.p = Vector3(0.0, 0.0, 1.0);
      out.state.q = yaw_roll(0.3, 0.0);
      break;
    }
    case TrajectoryKind::kFigureEight: {
      const double w = kTwoPi / kFigureEightPeriod;
      const double A = 3.0, B = 2.0, C = 0.2;
      const double s = std::sin(w * t), c = std::cos(w * t);
      const double s2 = std::sin(2 * w * t), c2 = std::cos(2 * w * t);
      out.state.p = Vector3(A * s, 0.5 * B * s2, 1.0 + C * s);
      out.state.v = Vector3(A * w * c, B * w * c2, C * w * c);
      out.accel_world = Vector3(-A * w * w * s, -2 * B * w * w * s2, -C * w * w * s);
      const double yaw = 0.5 * s, yaw_dot = 0.5 * w * c;
      const double roll = 0.1 * s2, roll_dot = 0.2 * w * c2;
      out.state.q = yaw_roll(yaw, roll);
      out.omega_body = yaw_roll_rate(roll, yaw_dot, roll_dot);
      break;
    }
    case TrajectoryKind::kWaypoint: {
      const std::size_t segments = spec.waypoints.size() - 1;
      const double seg_time = spec.duration / static_cast<double>(segments);
      std::size_t i = static_cast<std::size_t>(std::floor(t / seg_time));
      if (i >= segments) i = segments - 1;
      const double tau = std::clamp((t - i * seg_time) / seg_time, 0.0, 1.0);
      double s, ds, dds;
      min_jerk(tau, s, ds, dds);
      const Vector3 delta = spec.waypoints[i + 1] - spec.waypoints[i];
      out.state.p = spec.waypoints[i] + delta * s;
      out.state.v = delta * ds / seg_time;
      out.accel_world = delta * dds / (seg_time * seg_time);
      const double w = kTwoPi / spec.duration;
      out.state.q = yaw_roll(0.3 * std::sin(w * t), 0.0);
      out.omega_body = Vector3(0.0, 0.0, 0.3 * w * std::cos(w * t));
      break;
    }
  }
  out.state.q = canonical(out.state.q);
  return out;
}

std::vector<Nominal> generate_truth(const ScenarioSpec& spec) {
  spec.validate();
  const std::size_t n = sample_count(spec);
  std::vector<Nominal> truth;
  truth.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    truth.push_back(evaluate_truth(spec, static_cast<double>(k) / spec.imu_rate).state);
  }
  return truth;
}

SensorStream sample_sensors(const std::vector<Nominal>& truth,
                            const ScenarioSpec& spec) {
  spec.validate();
  SensorStream out;

  auto imu_rng = make_engine(spec.seed, 0, 0);
  std::normal_distribution<double> normal(0.0, 1.0);

  struct ChannelState {
    std::mt19937_64 rng;
    std::size_t stride;
    std::normal_distribution<double> normal{0.0, 1.0};
    std::uniform_real_distribution<double> uniform{0.0, 1.0};
    int jump_left = 0;
    Vector9 jump_offset = Vector9::Zero();
    std::size_t onsets = 0;
  };
  std::vector<ChannelState> channels;
  for (std::size_t i = 0; i < spec.sensors.size(); ++i) {
    const auto& s = spec.sensors[i];
    channels.push_back(ChannelState{
        make_engine(spec.seed, i + 1, s.noise.seed),
        static_cast<std::size_t>(std::llround(spec.imu_rate / s.rate))});
  }

  out.events.reserve(truth.size() * (1 + spec.sensors.size()));
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double t = truth[k].time;
    const TruthPoint tp = evaluate_truth(spec, t);

    Imu imu;
    imu.time = t;
    imu.accel = tp.state.q.conjugate() * (tp.accel_world - spec.gravity);
    imu.gyro = tp.omega_body;
    for (int a = 0; a < 3; ++a) imu.accel(a) += spec.imu_noise.accel_std * normal(imu_rng);
    for (int a = 0; a < 3; ++a) imu.gyro(a) += spec.imu_noise.gyro_std * normal(imu_rng);
    out.events.emplace_back(imu);

    if (k == 0) continue;
    for (std::size_t i = 0; i < spec.sensors.size(); ++i) {
      auto& ch = channels[i];
      if (k % ch.stride != 0) continue;
      const NoiseSpec& noise = spec.sensors[i].noise;

      Vector9 offset;
      for (int c = 0; c < 9; ++c) offset(c) = noise.gaussian_std(c) * ch.normal(ch.rng);

      if (noise.jump_probability > 0.0 && ch.uniform(ch.rng) < noise.jump_probability) {
        ++ch.onsets;
        ch.jump_left = noise.jump_duration;
        ch.jump_offset.setZero();
        for (int c : {0, 1, 2, 6, 7, 8}) {
          const double sign = ch.uniform(ch.rng) < 0.5 ? -1.0 : 1.0;
          ch.jump_offset(c) = sign * noise.jump_magnitude * noise.gaussian_std(c);
        }
      }
      if (ch.jump_left > 0) {
        offset += ch.jump_offset;
        --ch.jump_left;
      }

      if (!noise.drift_rate.isZero() && t >= noise.drift_start) {
        const double elapsed = t - noise.drift_start;
        const double episode = noise.drift_steps > 0
                                   ? noise.drift_steps / spec.sensors[i].rate
                                   : std::numeric_limits<double>::infinity();
        if (elapsed < episode) {
          // A drifting tracker also reports the drift velocity.
          offset += noise.drift_rate * elapsed;
          offset.segment<3>(kVel) += noise.drift_rate.segment<3>(kPos);
        }
      }

      Odometry z;
      z.sensor_id = spec.sensors[i].id;
      z.time = t;
      z.p = truth[k].p + offset.segment<3>(kPos);
      z.q = canonical(quat_exp<double>(offset.segment<3>(kRot)) * truth[k].q);
      z.v = truth[k].v + offset.segment<3>(kVel);
      out.events.emplace_back(std::move(z));
    }
  }
  for (std::size_t i = 0; i < spec.sensors.size(); ++i) {
    out.jump_onsets[spec.sensors[i].id] = channels[i].onsets;
  }
  return out;
}

ScenarioSpec make_scenario(const std::string& name, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.seed = seed;
  NoiseSpec vio;
  vio.gaussian_std << 0.05, 0.05, 0.05, 0.01, 0.01, 0.01, 0.05, 0.05, 0.05;
  spec.sensors = {{"vio_left", 50.0, vio}, {"vio_right", 50.0, vio}};
  spec.sensors[1].noise.seed = 1;

  if (name == "hover") {
    spec.kind = TrajectoryKind::kHover;
  } else if (name == "figure-eight") {
    spec.kind = TrajectoryKind::kFigureEight;
  } else if (name == "waypoint") {
    spec.kind = TrajectoryKind::kWaypoint;
    spec.waypoints = {{0, 0, 1}, {4, 0, 1}, {4, 3, 1.5}, {0, 3, 1}};
  } else if (name == "jumps") {
    spec.kind = TrajectoryKind::kFigureEight;
    spec.duration = 30.0;
    for (auto& s : spec.sensors) {
      s.noise.jump_probability = 0.05;
      s.noise.jump_magnitude = 50.0;
      s.noise.jump_duration = 5;
    }
  } else if (name == "divergence") {
    spec.kind = TrajectoryKind::kHover;
    spec.duration = 30.0;
    auto& bad = spec.sensors[1].noise;
    bad.drift_rate << 0.3, -0.2, 0.1, 0, 0, 0, 0, 0, 0;
    bad.drift_start = 10.0;
    bad.drift_steps = 100;
  } else {
    throw ValidationError("scenario: unknown scenario '" + name +
                          "' (expected hover, waypoint, figure-eight, jumps or divergence)");
  }
  return spec;
}

}  // namespace amcckf
