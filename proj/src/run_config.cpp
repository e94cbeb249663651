#include "amcckf/run_config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>

namespace amcckf {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x)) {
    throw ValidationError(key + ": expected a number, got '" + v + "'");
  }
  return x;
}

long long to_integer(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x)) throw ValidationError(key + ": expected an integer, got '" + v + "'");
  return static_cast<long long>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "filter") {
    filter = parse_variant(v);
  } else if (key == "window") {
    window = static_cast<int>(to_integer(key, v));
  } else if (key == "rho") {
    rho = to_double(key, v);
  } else if (key == "bandwidth") {
    if (v == "adaptive" || v == "auto") {
      adaptive_bandwidth = true;
    } else {
      adaptive_bandwidth = false;
      static_bandwidth = to_double(key, v);
    }
  } else if (key == "sigma_min") {
    sigma_min = to_double(key, v);
  } else if (key == "sigma_max") {
    sigma_max = to_double(key, v);
  } else if (key == "r0") {
    r0 = to_double(key, v);
  } else if (key.rfind("r0.", 0) == 0 && key.size() > 3) {
    r0_per_sensor[key.substr(3)] = to_double(key, v);
  } else if (key == "q0") {
    q0 = to_double(key, v);
  } else if (key == "p0") {
    p0 = to_double(key, v);
  } else if (key == "beta") {
    beta = to_double(key, v);
  } else if (key == "diagonal_r") {
    diagonal_r = to_bool(key, v);
  } else if (key == "diagonal_q") {
    diagonal_q = to_bool(key, v);
  } else if (key == "q_floor") {
    q_floor = to_double(key, v);
  } else if (key == "adapt_q") {
    adapt_q = to_bool(key, v);
  } else if (key == "q_gamma") {
    if (v == "innovation") {
      q_gamma = GammaSource::kInnovation;
    } else if (v == "residual") {
      q_gamma = GammaSource::kResidual;
    } else {
      throw ValidationError("q_gamma: expected innovation or residual, got '" + v + "'");
    }
  } else if (key == "seed") {
    const long long s = to_integer(key, v);
    if (s < 0) throw ValidationError("seed: must be non-negative");
    seed = static_cast<std::uint64_t>(s);
  } else if (key == "scenario") {
    scenario = v;
  } else if (key == "dataset") {
    dataset = v;
  } else if (key == "truth") {
    truth = v;
  } else if (key == "out") {
    out = v;
  } else if (key == "duration") {
    duration = to_double(key, v);
  } else if (key == "imu_rate") {
    imu_rate = to_double(key, v);
  } else if (key == "odom_rate") {
    odom_rate = to_double(key, v);
  } else if (key == "jump_probability") {
    jump_probability = to_double(key, v);
  } else if (key == "jump_magnitude") {
    jump_magnitude = to_double(key, v);
  } else if (key == "jump_duration") {
    jump_duration = static_cast<int>(to_integer(key, v));
  } else {
    throw ValidationError(key + ": unknown configuration key");
  }
}

void RunConfig::validate() const {
  if (window < 1) throw ValidationError("window: must be >= 1");
  if (!(rho >= 0.9 && rho <= 1.0)) throw ValidationError("rho: must lie in [0.9, 1]");
  if (!adaptive_bandwidth && !(static_bandwidth > 0.0)) {
    throw ValidationError("bandwidth: static value must be positive");
  }
  if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min)) {
    throw ValidationError("sigma_min: need 0 < sigma_min <= sigma_max");
  }
  if (!(r0 > 0.0)) throw ValidationError("r0: must be positive");
  for (const auto& [id, v] : r0_per_sensor) {
    if (!(v > 0.0)) throw ValidationError("r0." + id + ": must be positive");
  }
  if (!(q0 >= 0.0)) throw ValidationError("q0: must be non-negative");
  if (!(p0 > 0.0)) throw ValidationError("p0: must be positive");
  if (!(q_floor >= 0.0)) throw ValidationError("q_floor: must be non-negative");
  if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("beta: must lie in (0, 1]");
  if (dataset.empty()) make_scenario(scenario, seed);
  if (!dataset.empty() && !truth.empty() && truth == dataset) {
    throw ValidationError("truth: must differ from dataset");
  }
  if (duration && !(*duration > 0.0)) throw ValidationError("duration: must be positive");
  if (imu_rate && !(*imu_rate > 0.0)) throw ValidationError("imu_rate: must be positive");
  if (odom_rate && !(*odom_rate > 0.0)) throw ValidationError("odom_rate: must be positive");
  if (jump_probability && !(*jump_probability >= 0.0 && *jump_probability <= 1.0)) {
    throw ValidationError("jump_probability: must lie in [0, 1]");
  }
  if (jump_magnitude && !(*jump_magnitude >= 0.0)) {
    throw ValidationError("jump_magnitude: must be non-negative");
  }
  if (jump_duration && *jump_duration < 1) throw ValidationError("jump_duration: must be >= 1");
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  std::ifstream is(path);
  if (!is) throw ValidationError("config: cannot open '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config: " + path + ":" + std::to_string(lineno) +
                            ": expected key = value");
    }
    base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

FusionConfig make_fusion_config(const RunConfig& rc,
                                const std::vector<std::string>& sensor_ids) {
  rc.validate();
  FusionConfig fc;
  fc.apply_variant(rc.filter);
  if (fc.kernel.mode != KernelMode::kNone) {
    fc.kernel.mode = rc.adaptive_bandwidth ? KernelMode::kAdaptive : KernelMode::kStatic;
  }
  fc.kernel.static_bandwidth = rc.static_bandwidth;
  fc.kernel.limits = {rc.sigma_min, rc.sigma_max};
  fc.window = rc.window;
  fc.rho = rc.rho;
  fc.beta = rc.beta;
  fc.q_gamma = rc.q_gamma;
  fc.adapt_process_noise = rc.adapt_q;
  fc.q_floor = rc.q_floor;
  fc.diagonal_r = rc.diagonal_r;
  fc.diagonal_q = rc.diagonal_q;
  fc.Q0 = rc.q0 * Matrix9::Identity();
  fc.P0 = rc.p0 * Matrix9::Identity();
  for (const auto& id : sensor_ids) {
    const auto it = rc.r0_per_sensor.find(id);
    const double r = it == rc.r0_per_sensor.end() ? rc.r0 : it->second;
    fc.sensors.push_back({id, r * Matrix9::Identity()});
  }
  for (const auto& [id, v] : rc.r0_per_sensor) {
    (void)v;
    bool found = false;
    for (const auto& s : sensor_ids) found = found || s == id;
    if (!found) throw ValidationError("r0." + id + ": no such sensor");
  }
  return fc;
}

ScenarioSpec make_scenario_spec(const RunConfig& rc) {
  ScenarioSpec spec = make_scenario(rc.scenario, rc.seed);
  if (rc.duration) spec.duration = *rc.duration;
  if (rc.imu_rate) spec.imu_rate = *rc.imu_rate;
  for (auto& s : spec.sensors) {
    if (rc.odom_rate) s.rate = *rc.odom_rate;
    if (rc.jump_probability) s.noise.jump_probability = *rc.jump_probability;
    if (rc.jump_magnitude) s.noise.jump_magnitude = *rc.jump_magnitude;
    if (rc.jump_duration) s.noise.jump_duration = *rc.jump_duration;
  }
  spec.validate();
  return spec;
}

}  // namespace amcckf
