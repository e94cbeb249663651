#pragma once

#include <map>
#include <optional>
#include <string>

#include "amcckf/adapt_residual.hpp"
#include "amcckf/adapt_vb.hpp"
#include "amcckf/filter_core.hpp"
#include "amcckf/kernel_bandwidth.hpp"

namespace amcckf {

enum class AdaptationMode { kNone, kVariationalBayes, kResidual };

template <typename Scalar>
struct AdaptiveFilterConfig {
  KernelConfig<Scalar> kernel;
  AdaptationMode adaptation = AdaptationMode::kNone;
  VbConfig<Scalar> vb;
  ResidualConfig<Scalar> residual;
};

/// Multi-sensor adaptive correntropy filter for vector-space states. Noise
/// covariances and kernel bandwidths are owned here; the models only supply
/// f, h and their Jacobians.
template <typename Scalar>
class AdaptiveFilter {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  AdaptiveFilter(AdaptiveFilterConfig<Scalar> config,
                 GaussianBelief<Scalar> initial, Matrix Q0)
      : config_(std::move(config)), belief_(std::move(initial)), Q_(Q0) {
    const Eigen::Index n = belief_.dim();
    transition_ = Matrix::Identity(n, n);
    switch (config_.adaptation) {
      case AdaptationMode::kVariationalBayes:
        vb_.emplace(config_.vb, Q0);
        break;
      case AdaptationMode::kResidual:
        residual_.emplace(config_.residual, Q0);
        break;
      case AdaptationMode::kNone:
        break;
    }
  }

  void add_sensor(MeasurementModel<Scalar> model) {
    if (vb_) vb_->add_sensor(model.sensor_id, model.noise);
    if (residual_) residual_->add_sensor(model.sensor_id, model.noise);
    const std::string id = model.sensor_id;
    sensors_.insert_or_assign(id, std::move(model));
  }

  void predict(const ProcessModel<Scalar>& model, const Vector& u, Scalar dt) {
    ProcessModel<Scalar> with_noise = model;
    with_noise.noise = Q_;
    const Matrix F = model.jacobian(belief_.mean, u, dt);
    belief_ = amcckf::predict(belief_, with_noise, u, dt);
    transition_ = (F * transition_).eval();
    ++steps_;
  }

  const InnovationRecord<Scalar>& update(const std::string& sensor_id,
                                         const Vector& z) {
    auto it = sensors_.find(sensor_id);
    if (it == sensors_.end()) {
      throw ValidationError("unknown sensor '" + sensor_id + "'");
    }
    auto& model = it->second;
    if (!z.allFinite()) {
      throw MeasurementRejected("measurement from '" + sensor_id +
                                "' contains non-finite values");
    }

    InnovationRecord<Scalar> rec;
    rec.sensor_id = sensor_id;
    rec.time = belief_.time;
    rec.innovation = z - model.observe(belief_.mean);
    rec.H = model.jacobian(belief_.mean);
    const Matrix& R = model.noise;
    if (config_.kernel.mode == KernelMode::kNone) {
      rec.weights = CorrentropyWeights<Scalar>::ones(z.size());
    } else {
      model.bandwidth = select_bandwidth(config_.kernel, rec.innovation, R,
                                         rec.H, belief_.covariance);
      rec.weights = correntropy_weights(rec.innovation, R, model.bandwidth);
    }

    Correction<Scalar> c =
        correct(belief_, rec.innovation, rec.H, R, rec.weights.weighted);
    rec.residual = z - model.observe(c.posterior.mean);
    rec.x_prior = belief_.mean;
    rec.x_post = c.posterior.mean;
    rec.P_prior = belief_.covariance;
    rec.P_post = c.posterior.covariance;
    rec.K = c.gain;
    rec.F = transition_;
    rec.process_steps = steps_;
    rec.regularized = c.regularized;
    belief_ = std::move(c.posterior);
    transition_.setIdentity();
    steps_ = 0;

    if (vb_) {
      vb_->push(rec);
      Q_ = vb_->process_noise();
      model.noise = vb_->measurement_noise(sensor_id);
    } else if (residual_) {
      residual_->push(rec);
      Q_ = residual_->process_noise();
      model.noise = residual_->measurement_noise(sensor_id);
    }
    last_ = std::move(rec);
    return last_;
  }

  const GaussianBelief<Scalar>& belief() const { return belief_; }
  const Matrix& process_noise() const { return Q_; }
  const Matrix& measurement_noise(const std::string& id) const {
    return sensors_.at(id).noise;
  }
  const Vector& bandwidth(const std::string& id) const {
    return sensors_.at(id).bandwidth;
  }
  const InnovationRecord<Scalar>& last_record() const { return last_; }

 private:
  AdaptiveFilterConfig<Scalar> config_;
  GaussianBelief<Scalar> belief_;
  Matrix Q_;
  Matrix transition_;
  int steps_ = 0;
  std::map<std::string, MeasurementModel<Scalar>> sensors_;
  std::optional<VbAdapter<Scalar>> vb_;
  std::optional<ResidualAdapter<Scalar>> residual_;
  InnovationRecord<Scalar> last_;
};

}  // namespace amcckf
