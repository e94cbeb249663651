#include "amcckf/fusion.hpp"

#include <limits>

namespace amcckf {

double event_time(const Event& e) {
  return std::visit([](const auto& s) { return s.time; }, e);
}

std::string_view to_string(FilterVariant v) {
  switch (v) {
    case FilterVariant::kEkf:
      return "ekf";
    case FilterVariant::kAkf:
      return "akf";
    case FilterVariant::kMcckf:
      return "mcckf";
    case FilterVariant::kRAmcckf:
      return "r-amcckf";
    case FilterVariant::kVbAmcckf:
      return "vb-amcckf";
  }
  return "?";
}

FilterVariant parse_variant(std::string_view name) {
  for (FilterVariant v : all_variants()) {
    if (to_string(v) == name) return v;
  }
  throw ValidationError("filter: unknown variant '" + std::string(name) +
                        "' (expected ekf, akf, mcckf, r-amcckf or vb-amcckf)");
}

std::vector<FilterVariant> all_variants() {
  return {FilterVariant::kEkf, FilterVariant::kAkf, FilterVariant::kMcckf,
          FilterVariant::kRAmcckf, FilterVariant::kVbAmcckf};
}

void FusionConfig::apply_variant(FilterVariant v) {
  switch (v) {
    case FilterVariant::kEkf:
      kernel.mode = KernelMode::kNone;
      adaptation = AdaptationMode::kNone;
      break;
    case FilterVariant::kAkf:
      kernel.mode = KernelMode::kNone;
      adaptation = AdaptationMode::kVariationalBayes;
      break;
    case FilterVariant::kMcckf:
      kernel.mode = KernelMode::kStatic;
      adaptation = AdaptationMode::kNone;
      break;
    case FilterVariant::kRAmcckf:
      kernel.mode = KernelMode::kAdaptive;
      adaptation = AdaptationMode::kResidual;
      break;
    case FilterVariant::kVbAmcckf:
      kernel.mode = KernelMode::kAdaptive;
      adaptation = AdaptationMode::kVariationalBayes;
      break;
  }
}

FusionEngine::FusionEngine(FusionConfig config, Nominal initial)
    : config_(std::move(config)),
      nominal_(initial),
      P_(config_.P0),
      Q_(config_.Q0) {
  if (config_.sensors.empty()) {
    throw ValidationError("sensors: at least one odometry sensor is required");
  }
  if (!(config_.q_floor >= 0.0)) throw ValidationError("q_floor: must be non-negative");
  const MatrixX<double> Q0 = config_.Q0;
  switch (config_.adaptation) {
    case AdaptationMode::kVariationalBayes:
      vb_.emplace(VbConfig<double>{config_.window, config_.rho,
                                   config_.adapt_process_noise, config_.diagonal_r},
                  Q0);
      break;
    case AdaptationMode::kResidual:
      residual_.emplace(
          ResidualConfig<double>{config_.window, config_.beta, config_.q_gamma,
                                 config_.diagonal_q, config_.diagonal_r,
                                 config_.adapt_process_noise},
          Q0);
      break;
    case AdaptationMode::kNone:
      break;
  }
  for (const auto& s : config_.sensors) {
    const double init_bw = config_.kernel.mode == KernelMode::kStatic
                               ? config_.kernel.static_bandwidth
                               : std::numeric_limits<double>::infinity();
    sensors_[s.id] = SensorState{s.R0, Vector9::Constant(init_bw)};
    if (vb_) vb_->add_sensor(s.id, MatrixX<double>(s.R0));
    if (residual_) residual_->add_sensor(s.id, MatrixX<double>(s.R0));
  }
}

const Matrix9& FusionEngine::measurement_noise(const std::string& sensor) const {
  return sensors_.at(sensor).R;
}

const Vector9& FusionEngine::bandwidth(const std::string& sensor) const {
  return sensors_.at(sensor).bandwidth;
}

bool FusionEngine::accept_time(double t) {
  if (t < nominal_.time - config_.out_of_order_tolerance) {
    ++dropped_;
    return false;
  }
  return true;
}

void FusionEngine::propagate_to(double t) {
  const double dt = t - nominal_.time;
  if (!(dt > 0.0)) return;
  if (!last_imu_) {
    // No inertial data yet: hold the state.
    nominal_.time = t;
    return;
  }
  const Matrix9 F = error_transition<double>(nominal_, *last_imu_, dt);
  nominal_ = propagate_nominal<double>(nominal_, *last_imu_, config_.gravity, dt);
  nominal_.time = t;
  P_ = F * P_ * F.transpose() + Q_;
  P_ = (0.5 * (P_ + P_.transpose())).eval();
  transition_ = (F * transition_).eval();
  ++steps_;
}

void FusionEngine::on_imu(const Imu& imu) {
  check_finite(imu);
  propagate_to(imu.time);
  last_imu_ = imu;
}

void FusionEngine::on_odometry(const Odometry& z) {
  auto it = sensors_.find(z.sensor_id);
  if (it == sensors_.end()) {
    throw DataError("unknown sensor id '" + z.sensor_id + "'");
  }
  if (!z.p.allFinite() || !z.v.allFinite() || !z.q.coeffs().allFinite()) {
    throw MeasurementRejected("odometry from '" + z.sensor_id +
                              "' contains non-finite values");
  }
  propagate_to(z.time);
  SensorState& sensor = it->second;

  const ObservationResidual<double> obs = observation_residual<double>(nominal_, z);
  const MatrixX<double> H = obs.H;
  const MatrixX<double> R = sensor.R;
  const MatrixX<double> P = P_;
  const VectorX<double> y = obs.y;

  CorrentropyWeights<double> weights;
  if (config_.kernel.mode == KernelMode::kNone) {
    weights = CorrentropyWeights<double>::ones(kErrorDim);
    sensor.bandwidth.setConstant(std::numeric_limits<double>::infinity());
  } else {
    const VectorX<double> bw = select_bandwidth(config_.kernel, y, R, H, P);
    sensor.bandwidth = bw;
    weights = correntropy_weights(y, R, bw);
  }

  GaussianBelief<double> prior{VectorX<double>::Zero(kErrorDim), P, nominal_.time};
  Correction<double> c = correct(prior, y, H, R, weights.weighted);
  const Vector9 dx = c.posterior.mean;
  nominal_ = inject_and_reset<double>(nominal_, dx);
  P_ = c.posterior.covariance;

  InnovationRecord<double> rec;
  rec.sensor_id = z.sensor_id;
  rec.time = z.time;
  rec.innovation = y;
  rec.residual = observation_residual<double>(nominal_, z).y;
  rec.x_prior = VectorX<double>::Zero(kErrorDim);
  rec.x_post = dx;
  rec.H = H;
  rec.P_prior = P;
  rec.P_post = c.posterior.covariance;
  rec.F = transition_;
  rec.K = c.gain;
  rec.process_steps = steps_;
  rec.weights = weights;
  rec.regularized = c.regularized;
  transition_.setIdentity();
  steps_ = 0;

  if (vb_) {
    vb_->push(std::move(rec));
    if (vb_->last_regularized()) ++regularizations_;
  } else if (residual_) {
    residual_->push(rec);
  }
  refresh_noise();

  if (c.regularized) ++regularizations_;
  if (obs.antipodal) ++antipodal_;
  last_.sensor_id = z.sensor_id;
  last_.time = z.time;
  last_.innovation = obs.y;
  last_.bandwidth = sensor.bandwidth;
  last_.weighted = weights.weighted;
  last_.unweighted = weights.unweighted;
  last_.antipodal = obs.antipodal;
  last_.regularized = c.regularized;
}

void FusionEngine::refresh_noise() {
  if (vb_) {
    Q_ = project_psd(vb_->process_noise(), config_.q_floor);
    for (auto& [id, s] : sensors_) s.R = vb_->measurement_noise(id);
  } else if (residual_) {
    Q_ = project_psd(residual_->process_noise(), config_.q_floor);
    for (auto& [id, s] : sensors_) s.R = residual_->measurement_noise(id);
  }
}

StepStatus FusionEngine::fuse_step(const Event& event) {
  if (!accept_time(event_time(event))) return StepStatus::kRejected;
  if (const auto* imu = std::get_if<Imu>(&event)) {
    on_imu(*imu);
    return StepStatus::kPropagated;
  }
  on_odometry(std::get<Odometry>(event));
  return StepStatus::kCorrected;
}

}  // namespace amcckf
