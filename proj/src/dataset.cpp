#include "amcckf/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace amcckf {
namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& what) {
  throw DataError(path + ":" + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& s, const std::string& path, std::size_t line) {
  if (s.empty()) fail(path, line, "missing numeric field");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    fail(path, line, "invalid number '" + s + "'");
  }
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  return os;
}

Eigen::Quaterniond from_xyz(double x, double y, double z) {
  const double w2 = 1.0 - (x * x + y * y + z * z);
  return Eigen::Quaterniond(std::sqrt(std::max(w2, 0.0)), x, y, z);
}

}  // namespace

void write_dataset(const std::string& path, const std::vector<Event>& events) {
  std::ofstream os = open_out(path);
  os << kDatasetHeader << '\n';
  for (const Event& e : events) {
    if (const auto* imu = std::get_if<Imu>(&e)) {
      os << fmt(imu->time) << ",imu,imu";
      for (int i = 0; i < 3; ++i) os << ',' << fmt(imu->accel(i));
      for (int i = 0; i < 3; ++i) os << ',' << fmt(imu->gyro(i));
      os << ",,,\n";
    } else {
      const auto& z = std::get<Odometry>(e);
      Eigen::Quaterniond q = z.q;
      if (q.w() < 0.0) q.coeffs() = -q.coeffs();
      os << fmt(z.time) << ",odom," << z.sensor_id;
      for (int i = 0; i < 3; ++i) os << ',' << fmt(z.p(i));
      os << ',' << fmt(q.x()) << ',' << fmt(q.y()) << ',' << fmt(q.z());
      for (int i = 0; i < 3; ++i) os << ',' << fmt(z.v(i));
      os << '\n';
    }
  }
}

Dataset ingest_dataset(const std::string& path,
                       const std::set<std::string>& known_sensors,
                       double tolerance) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open dataset '" + path + "'");

  Dataset out;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) {
    out.warnings.push_back(path + ": empty dataset");
    return out;
  }
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split(line) != split(kDatasetHeader)) {
    fail(path, lineno, "unexpected header (expected '" + std::string(kDatasetHeader) + "')");
  }

  double last_time = -std::numeric_limits<double>::infinity();
  std::size_t last_line = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 12) {
      fail(path, lineno, "expected 12 fields, found " + std::to_string(f.size()));
    }
    const double t = parse_number(f[0], path, lineno);
    if (t < last_time - tolerance) {
      fail(path, lineno, "timestamp " + fmt(t) + " precedes row " +
                             std::to_string(last_line) + " (" + fmt(last_time) + ")");
    }
    if (t > last_time) {
      last_time = t;
      last_line = lineno;
    }

    auto num = [&](int i) { return parse_number(f[3 + i], path, lineno); };
    if (f[1] == "imu") {
      Imu imu;
      imu.time = t;
      imu.accel = Vector3(num(0), num(1), num(2));
      imu.gyro = Vector3(num(3), num(4), num(5));
      out.events.emplace_back(imu);
    } else if (f[1] == "odom") {
      if (f[2].empty()) fail(path, lineno, "odometry row without sensor_id");
      if (!known_sensors.empty() && !known_sensors.count(f[2])) {
        fail(path, lineno, "unknown sensor id '" + f[2] + "'");
      }
      Odometry z;
      z.sensor_id = f[2];
      z.time = t;
      z.p = Vector3(num(0), num(1), num(2));
      const double qx = num(3), qy = num(4), qz = num(5);
      if (qx * qx + qy * qy + qz * qz > 1.0 + 1e-6) {
        fail(path, lineno, "quaternion vector part has norm > 1");
      }
      z.q = from_xyz(qx, qy, qz);
      z.v = Vector3(num(6), num(7), num(8));
      out.events.emplace_back(std::move(z));
    } else {
      fail(path, lineno, "unknown row kind '" + f[1] + "'");
    }
  }
  if (out.events.empty()) out.warnings.push_back(path + ": empty dataset");
  return out;
}

void write_truth(const std::string& path, const std::vector<Nominal>& truth) {
  std::ofstream os = open_out(path);
  os << kTruthHeader << '\n';
  for (const Nominal& x : truth) {
    os << fmt(x.time);
    for (int i = 0; i < 3; ++i) os << ',' << fmt(x.p(i));
    os << ',' << fmt(x.q.w()) << ',' << fmt(x.q.x()) << ',' << fmt(x.q.y()) << ','
       << fmt(x.q.z());
    for (int i = 0; i < 3; ++i) os << ',' << fmt(x.v(i));
    os << '\n';
  }
}

std::vector<Nominal> read_truth(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open truth file '" + path + "'");
  std::vector<Nominal> out;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) return out;
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split(line) != split(kTruthHeader)) fail(path, lineno, "unexpected truth header");
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 11) fail(path, lineno, "expected 11 fields");
    double v[11];
    for (int i = 0; i < 11; ++i) v[i] = parse_number(f[i], path, lineno);
    Nominal x;
    x.time = v[0];
    x.p = Vector3(v[1], v[2], v[3]);
    x.q = Eigen::Quaterniond(v[4], v[5], v[6], v[7]).normalized();
    x.v = Vector3(v[8], v[9], v[10]);
    if (!out.empty() && x.time < out.back().time) {
      fail(path, lineno, "truth timestamps must be non-decreasing");
    }
    out.push_back(x);
  }
  return out;
}

std::vector<std::string> sensor_ids(const std::vector<Event>& events) {
  std::vector<std::string> ids;
  for (const Event& e : events) {
    if (const auto* z = std::get_if<Odometry>(&e)) {
      if (std::find(ids.begin(), ids.end(), z->sensor_id) == ids.end()) {
        ids.push_back(z->sensor_id);
      }
    }
  }
  return ids;
}

}  // namespace amcckf
