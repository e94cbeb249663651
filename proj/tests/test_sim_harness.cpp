#include <gtest/gtest.h>

#include <cmath>

#include "amcckf/experiment.hpp"
#include "amcckf/sim_harness.hpp"

namespace amcckf {
namespace {

std::vector<Odometry> odometry_of(const std::vector<Event>& events, const std::string& id) {
  std::vector<Odometry> out;
  for (const auto& e : events) {
    if (const auto* z = std::get_if<Odometry>(&e); z && z->sensor_id == id) out.push_back(*z);
  }
  return out;
}

TEST(GenerateTruth, HoverIsStatic) {
  const auto truth = generate_truth(make_scenario("hover", 1));
  ASSERT_GT(truth.size(), 2u);
  for (const auto& x : truth) {
    EXPECT_EQ(x.p, truth.front().p);
    EXPECT_EQ(x.v, Vector3::Zero());
  }
}

TEST(GenerateTruth, WaypointEndpoints) {
  ScenarioSpec spec = make_scenario("waypoint", 1);
  spec.waypoints = {{0, 0, 1}, {3, -2, 2}};
  spec.duration = 10.0;
  const auto truth = generate_truth(spec);
  EXPECT_LT((truth.front().p - spec.waypoints[0]).norm(), 1e-6);
  EXPECT_LT((truth.back().p - spec.waypoints[1]).norm(), 1e-6);
  EXPECT_LT(truth.back().v.norm(), 1e-6);
}

TEST(GenerateTruth, FigureEightSelfConsistent) {
  const ScenarioSpec spec = make_scenario("figure-eight", 1);
  const auto truth = generate_truth(spec);
  const double dt = 1.0 / spec.imu_rate;
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < truth.size(); ++k) {
    const Vector3 fd = (truth[k + 1].p - truth[k].p) / dt;
    worst = std::max(worst, (fd - truth[k].v).norm());
  }
  EXPECT_LT(worst, 1e-3 * 2);
  // Central differences are second-order accurate.
  double central = 0.0;
  for (std::size_t k = 1; k + 1 < truth.size(); ++k) {
    const Vector3 fd = (truth[k + 1].p - truth[k - 1].p) / (2 * dt);
    central = std::max(central, (fd - truth[k].v).norm());
  }
  EXPECT_LT(central, 1e-3);
}

TEST(GenerateTruth, ImuIsKinematicallyExact) {
  ScenarioSpec spec = make_scenario("figure-eight", 1);
  spec.imu_noise = {0.0, 0.0};
  spec.duration = 2.0;
  const auto truth = generate_truth(spec);
  const auto stream = sample_sensors(truth, spec);
  const double dt = 1.0 / spec.imu_rate;
  std::size_t k = 0;
  for (const auto& e : stream.events) {
    const auto* imu = std::get_if<Imu>(&e);
    if (!imu) continue;
    if (k > 0 && k + 1 < truth.size()) {
      const Vector3 a_fd = (truth[k + 1].v - truth[k - 1].v) / (2 * dt);
      const Vector3 a_imu = truth[k].q * imu->accel + spec.gravity;
      EXPECT_LT((a_fd - a_imu).norm(), 1e-3);
    }
    ++k;
  }
}

TEST(SampleSensors, DeterministicUnderSeed) {
  ScenarioSpec spec = make_scenario("jumps", 9);
  spec.duration = 5.0;
  const auto truth = generate_truth(spec);
  const auto a = sample_sensors(truth, spec);
  const auto b = sample_sensors(truth, spec);
  ASSERT_EQ(a.events.size(), b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    ASSERT_EQ(a.events[i].index(), b.events[i].index());
    if (const auto* za = std::get_if<Odometry>(&a.events[i])) {
      const auto& zb = std::get<Odometry>(b.events[i]);
      ASSERT_EQ(za->p, zb.p);
      ASSERT_EQ(za->q.coeffs(), zb.q.coeffs());
      ASSERT_EQ(za->v, zb.v);
    } else {
      const auto& ia = std::get<Imu>(a.events[i]);
      const auto& ib = std::get<Imu>(b.events[i]);
      ASSERT_EQ(ia.accel, ib.accel);
      ASSERT_EQ(ia.gyro, ib.gyro);
    }
  }
  spec.seed = 10;
  const auto c = sample_sensors(truth, spec);
  ASSERT_EQ(a.events.size(), c.events.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.events.size() && !differs; ++i) {
    if (const auto* ia = std::get_if<Imu>(&a.events[i])) {
      differs = ia->accel != std::get<Imu>(c.events[i]).accel;
    }
  }
  EXPECT_TRUE(differs);
}

TEST(SampleSensors, TimestampOrderedWithRates) {
  const ScenarioSpec spec = make_scenario("figure-eight", 2);
  const auto stream = sample_sensors(generate_truth(spec), spec);
  double prev = -1.0;
  for (const auto& e : stream.events) {
    ASSERT_GE(event_time(e), prev);
    prev = event_time(e);
  }
  const auto left = odometry_of(stream.events, "vio_left");
  EXPECT_EQ(left.size(), static_cast<std::size_t>(spec.duration * 50.0));
}

TEST(SampleSensors, JumpCountIsBinomial) {
  ScenarioSpec spec = make_scenario("hover", 11);
  spec.sensors.resize(1);
  spec.sensors[0].rate = spec.imu_rate;
  spec.sensors[0].noise.jump_probability = 0.05;
  spec.sensors[0].noise.jump_magnitude = 50.0;
  spec.duration = 10000.0 / spec.imu_rate;
  const auto stream = sample_sensors(generate_truth(spec), spec);
  const double N = static_cast<double>(odometry_of(stream.events, "vio_left").size());
  ASSERT_EQ(N, 10000.0);
  const double p = 0.05;
  const double onsets = static_cast<double>(stream.jump_onsets.at("vio_left"));
  EXPECT_LE(std::abs(onsets - N * p), 3.0 * std::sqrt(N * p * (1 - p)));
}

TEST(SampleSensors, JumpFreeErrorsAreGaussian) {
  ScenarioSpec spec = make_scenario("hover", 12);
  spec.sensors.resize(1);
  spec.sensors[0].rate = spec.imu_rate;
  spec.duration = 10000.0 / spec.imu_rate;
  const auto truth = generate_truth(spec);
  const auto odo = odometry_of(sample_sensors(truth, spec).events, "vio_left");
  ASSERT_EQ(odo.size(), 10000u);
  // Jarque-Bera on each position and velocity channel; the 1% critical value
  // of chi-square with two degrees of freedom is 9.21.
  for (int c = 0; c < 6; ++c) {
    std::vector<double> e;
    for (std::size_t i = 0; i < odo.size(); ++i) {
      const auto& x = truth[i + 1];
      e.push_back(c < 3 ? odo[i].p(c) - x.p(c) : odo[i].v(c - 3) - x.v(c - 3));
    }
    const double n = static_cast<double>(e.size());
    double mean = 0.0;
    for (double v : e) mean += v;
    mean /= n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : e) {
      const double d = v - mean;
      m2 += d * d;
      m3 += d * d * d;
      m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const double skew = m3 / std::pow(m2, 1.5);
    const double kurt = m4 / (m2 * m2);
    const double jb = n / 6.0 * (skew * skew + 0.25 * (kurt - 3) * (kurt - 3));
    EXPECT_LT(jb, 9.21) << "channel " << c;
  }
}

TEST(SampleSensors, DriftEpisodeIsBounded) {
  const ScenarioSpec spec = make_scenario("divergence", 1);
  const auto truth = generate_truth(spec);
  const auto right = odometry_of(sample_sensors(truth, spec).events, "vio_right");
  const auto& noise = spec.sensors[1].noise;
  const double end = noise.drift_start + noise.drift_steps / spec.sensors[1].rate;
  double max_during = 0.0, max_after = 0.0;
  for (const auto& z : right) {
    const double err = (z.p - truth.front().p).norm();
    if (z.time >= noise.drift_start && z.time < end) max_during = std::max(max_during, err);
    if (z.time >= end) max_after = std::max(max_after, err);
  }
  EXPECT_GT(max_during, 0.5);
  EXPECT_LT(max_after, 0.5);
}

TEST(ScenarioSpec, Validation) {
  EXPECT_THROW(make_scenario("moon", 1), ValidationError);
  ScenarioSpec spec = make_scenario("hover", 1);
  spec.duration = 0.0;
  EXPECT_THROW(spec.validate(), ValidationError);
  spec = make_scenario("hover", 1);
  spec.sensors[0].rate = 33.0;
  EXPECT_THROW(spec.validate(), ValidationError);
  spec = make_scenario("hover", 1);
  spec.sensors[0].noise.jump_probability = 1.5;
  EXPECT_THROW(spec.validate(), ValidationError);
  spec = make_scenario("waypoint", 1);
  spec.waypoints.resize(1);
  EXPECT_THROW(spec.validate(), ValidationError);
}

// Noise-free sensors: every variant tracks the truth to integration accuracy.
TEST(ClosedLoop, NoiseFreeTracking) {
  ScenarioSpec spec = make_scenario("figure-eight", 13);
  spec.imu_noise = {0.0, 0.0};
  for (auto& s : spec.sensors) s.noise = NoiseSpec{};
  RunInput in;
  in.truth = generate_truth(spec);
  in.events = sample_sensors(in.truth, spec).events;
  for (FilterVariant v : all_variants()) {
    FusionConfig fc;
    fc.apply_variant(v);
    for (const auto& s : spec.sensors) fc.sensors.push_back({s.id, 0.01 * Matrix9::Identity()});
    const auto report = run_filter(fc, in, std::string(to_string(v)));
    double worst = 0.0;
    for (const auto& est : report.estimates) {
      worst = std::max(worst, (est.state.p - truth_at(in.truth, est.state.time)->p).norm());
    }
    EXPECT_LT(worst, 1e-2) << to_string(v);
  }
}

}  // namespace
}  // namespace amcckf
