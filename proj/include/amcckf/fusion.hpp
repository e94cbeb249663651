#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "amcckf/adapt_residual.hpp"
#include "amcckf/adapt_vb.hpp"
#include "amcckf/adaptive_filter.hpp"
#include "amcckf/eskf_se3.hpp"
#include "amcckf/filter_core.hpp"
#include "amcckf/kernel_bandwidth.hpp"

namespace amcckf {

using Nominal = NominalState<double>;
using Imu = ImuSample<double>;
using Odometry = OdometrySample<double>;
using Event = std::variant<Imu, Odometry>;

double event_time(const Event& e);

enum class FilterVariant { kEkf, kAkf, kMcckf, kRAmcckf, kVbAmcckf };

std::string_view to_string(FilterVariant v);
FilterVariant parse_variant(std::string_view name);
std::vector<FilterVariant> all_variants();

struct SensorSpec {
  std::string id;
  Matrix9 R0 = 0.01 * Matrix9::Identity();
};

struct FusionConfig {
  KernelConfig<double> kernel;
  AdaptationMode adaptation = AdaptationMode::kNone;
  int window = 10;
  double rho = 0.97;
  double beta = 1.0;
  GammaSource q_gamma = GammaSource::kInnovation;
  // Per-channel noise: the correntropy gain weights each measurement channel
  // by its own variance, which is only well posed for diagonal R.
  bool diagonal_q = true;
  bool diagonal_r = true;
  bool adapt_process_noise = true;
  // Smallest eigenvalue allowed in an adapted Q. Noise-free data otherwise
  // drives Q and P towards zero and the adaptive kernel locks out the sensor.
  double q_floor = 1e-8;
  Matrix9 Q0 = Matrix9::Identity() * 1e-8;
  Matrix9 P0 = Matrix9::Identity() * 1e-2;
  std::vector<SensorSpec> sensors;
  Vector3 gravity{0.0, 0.0, -9.81};
  double out_of_order_tolerance = 1e-3;  // seconds

  /// Kernel and adaptation presets:
  ///   ekf       no kernel, fixed noise
  ///   akf       no kernel, VB noise adaptation
  ///   mcckf     static kernel, fixed noise
  ///   r-amcckf  adaptive kernel, residual noise adaptation
  ///   vb-amcckf adaptive kernel, VB noise adaptation
  void apply_variant(FilterVariant v);
};

enum class StepStatus { kPropagated, kCorrected, kRejected };

struct CorrectionInfo {
  std::string sensor_id;
  double time = 0.0;
  Vector9 innovation = Vector9::Zero();
  Vector9 bandwidth = Vector9::Zero();  // +inf when the kernel is disabled
  Vector9 weighted = Vector9::Ones();
  Vector9 unweighted = Vector9::Ones();
  bool antipodal = false;
  bool regularized = false;
};

/// Loosely-coupled IMU/odometry error-state filter. Consumes a single
/// timestamp-ordered event stream; not thread-safe.
class FusionEngine {
 public:
  FusionEngine(FusionConfig config, Nominal initial);

  StepStatus fuse_step(const Event& event);

  const Nominal& nominal() const { return nominal_; }
  const Matrix9& covariance() const { return P_; }
  const Matrix9& process_noise() const { return Q_; }
  const Matrix9& measurement_noise(const std::string& sensor) const;
  const Vector9& bandwidth(const std::string& sensor) const;
  const CorrectionInfo& last_correction() const { return last_; }
  const FusionConfig& config() const { return config_; }

  std::size_t dropped_events() const { return dropped_; }
  std::size_t regularizations() const { return regularizations_; }
  std::size_t antipodal_events() const { return antipodal_; }

 private:
  struct SensorState {
    Matrix9 R;
    Vector9 bandwidth;
  };

  void propagate_to(double t);
  void on_imu(const Imu& imu);
  void on_odometry(const Odometry& z);
  void refresh_noise();
  bool accept_time(double t);

  FusionConfig config_;
  Nominal nominal_;
  Matrix9 P_;
  Matrix9 Q_;
  std::map<std::string, SensorState> sensors_;
  std::optional<Imu> last_imu_;

  Matrix9 transition_ = Matrix9::Identity();
  int steps_ = 0;

  std::optional<VbAdapter<double>> vb_;
  std::optional<ResidualAdapter<double>> residual_;

  CorrectionInfo last_;
  std::size_t dropped_ = 0;
  std::size_t regularizations_ = 0;
  std::size_t antipodal_ = 0;
};

}  // namespace amcckf
