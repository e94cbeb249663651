#pragma once

// Interleaved sensor dataset, UTF-8 CSV with a header row:
//
//   time_s,kind,sensor_id,d0,d1,d2,d3,d4,d5,d6,d7,d8
//
// kind "imu":  d0-d2 specific force, d3-d5 angular rate; d6-d8 empty.
// kind "odom": d0-d2 position, d3-d5 quaternion (x, y, z) with w >= 0
//              reconstructed on read, d6-d8 velocity.
//
// Ground truth goes to a separate CSV:
//
//   time_s,px,py,pz,qw,qx,qy,qz,vx,vy,vz

#include <set>
#include <string>
#include <vector>

#include "amcckf/fusion.hpp"

namespace amcckf {

inline constexpr const char* kDatasetHeader =
    "time_s,kind,sensor_id,d0,d1,d2,d3,d4,d5,d6,d7,d8";
inline constexpr const char* kTruthHeader =
    "time_s,px,py,pz,qw,qx,qy,qz,vx,vy,vz";

struct Dataset {
  std::vector<Event> events;
  std::vector<std::string> warnings;
};

void write_dataset(const std::string& path, const std::vector<Event>& events);

/// Reads and validates a dataset. Rows must be in non-decreasing time order
/// within `tolerance` seconds; odometry rows must name a sensor in
/// `known_sensors` unless the set is empty.
Dataset ingest_dataset(const std::string& path,
                       const std::set<std::string>& known_sensors = {},
                       double tolerance = 1e-3);

void write_truth(const std::string& path, const std::vector<Nominal>& truth);
std::vector<Nominal> read_truth(const std::string& path);

/// Odometry sensor ids in order of first appearance.
std::vector<std::string> sensor_ids(const std::vector<Event>& events);

}  // namespace amcckf
