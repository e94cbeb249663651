#pragma once

// Prediction/correction engine shared by every filter variant. The standard
// Kalman correction is the correntropy correction with all weights at one, so
// both go through the same code path.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "amcckf/linalg.hpp"
#include "amcckf/types.hpp"

namespace amcckf {

// Exponent floor for the Gaussian kernel. exp(-700) ~ 1e-304 keeps every
// weight strictly positive and away from denormals.
inline constexpr double kMinKernelExponent = -700.0;

template <typename Scalar>
struct GaussianBelief {
  VectorX<Scalar> mean;
  MatrixX<Scalar> covariance;
  double time = 0.0;

  Eigen::Index dim() const { return mean.size(); }
};

template <typename Scalar>
struct ProcessModel {
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  std::function<Vector(const Vector& x, const Vector& u, Scalar dt)> transition;
  std::function<Matrix(const Vector& x, const Vector& u, Scalar dt)> jacobian;
  Matrix noise;  // Q
};

template <typename Scalar>
struct MeasurementModel {
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  std::string sensor_id;
  std::function<Vector(const Vector& x)> observe;
  std::function<Matrix(const Vector& x)> jacobian;
  Matrix noise;      // R
  Vector bandwidth;  // one kernel bandwidth per measurement dimension
};

/// Diagonal correntropy gains, stored as vectors. `weighted` is C (kernel of
/// the R-weighted innovation), `unweighted` is L (kernel of the raw one).
template <typename Scalar>
struct CorrentropyWeights {
  VectorX<Scalar> unweighted;
  VectorX<Scalar> weighted;

  static CorrentropyWeights ones(Eigen::Index m) {
    return {VectorX<Scalar>::Ones(m), VectorX<Scalar>::Ones(m)};
  }
};

/// Everything the adaptation schemes need to know about one correction.
/// `F` and `process_steps` describe the transition from the previous
/// correction and are filled in by the owner of the filter loop.
template <typename Scalar>
struct InnovationRecord {
  std::string sensor_id;
  double time = 0.0;
  VectorX<Scalar> innovation;  // z - h(x_prior)
  VectorX<Scalar> residual;    // z - h(x_post)
  VectorX<Scalar> x_prior;
  VectorX<Scalar> x_post;
  MatrixX<Scalar> H;
  MatrixX<Scalar> P_prior;
  MatrixX<Scalar> P_post;
  MatrixX<Scalar> F;
  MatrixX<Scalar> K;
  int process_steps = 1;
  CorrentropyWeights<Scalar> weights;
  bool regularized = false;
};

template <typename Scalar>
using WindowSnapshot = InnovationRecord<Scalar>;

template <typename Scalar>
struct Correction {
  GaussianBelief<Scalar> posterior;
  MatrixX<Scalar> gain;
  bool regularized = false;
};

template <typename Scalar>
struct UpdateResult {
  GaussianBelief<Scalar> belief;
  InnovationRecord<Scalar> record;
};

template <typename Scalar>
Scalar gaussian_kernel(Scalar squared_norm, Scalar bandwidth) {
  const Scalar exponent = -squared_norm / (Scalar(2) * bandwidth * bandwidth);
  return std::exp(std::max(exponent, Scalar(kMinKernelExponent)));
}

/// Per-dimension correntropy gains. Off-diagonal entries of R do not enter
/// the kernel.
template <typename Scalar>
CorrentropyWeights<Scalar> correntropy_weights(const VectorX<Scalar>& innovation,
                                               const MatrixX<Scalar>& R,
                                               const VectorX<Scalar>& bandwidth) {
  const Eigen::Index m = innovation.size();
  CorrentropyWeights<Scalar> w{VectorX<Scalar>(m), VectorX<Scalar>(m)};
  for (Eigen::Index j = 0; j < m; ++j) {
    const Scalar sq = innovation(j) * innovation(j);
    w.weighted(j) = gaussian_kernel<Scalar>(sq / R(j, j), bandwidth(j));
    w.unweighted(j) = gaussian_kernel<Scalar>(sq, bandwidth(j));
  }
  return w;
}

template <typename Scalar>
MatrixX<Scalar> predict_covariance(const MatrixX<Scalar>& P,
                                   const MatrixX<Scalar>& F,
                                   const MatrixX<Scalar>& Q) {
  MatrixX<Scalar> out = F * P * F.transpose() + Q;
  symmetrize(out);
  return out;
}

template <typename Scalar>
GaussianBelief<Scalar> predict(const GaussianBelief<Scalar>& belief,
                               const ProcessModel<Scalar>& model,
                               const VectorX<Scalar>& u, Scalar dt) {
  if (!(dt > Scalar(0))) {
    throw ValidationError("predict: dt must be positive");
  }
  GaussianBelief<Scalar> out;
  out.mean = model.transition(belief.mean, u, dt);
  for (Eigen::Index i = 0; i < out.mean.size(); ++i) {
    if (!std::isfinite(out.mean(i))) {
      throw PropagationError(
          "predict: non-finite state at index " + std::to_string(i), i);
    }
  }
  const MatrixX<Scalar> F = model.jacobian(belief.mean, u, dt);
  out.covariance = predict_covariance<Scalar>(belief.covariance, F, model.noise);
  out.time = belief.time + static_cast<double>(dt);
  return out;
}

/// Correntropy-weighted correction in information form:
///   K = (P^-1 + H' C R^-1 H)^-1 H' C R^-1
/// followed by the Joseph-form covariance update with the unmodified R.
template <typename Scalar>
Correction<Scalar> correct(const GaussianBelief<Scalar>& prior,
                           const VectorX<Scalar>& innovation,
                           const MatrixX<Scalar>& H, const MatrixX<Scalar>& R,
                           const VectorX<Scalar>& weights) {
  using Matrix = MatrixX<Scalar>;
  const Eigen::Index n = prior.dim();

  Correction<Scalar> out;
  bool regularized = false;
  const Matrix P_inv = spd_inverse(prior.covariance, &regularized);
  const Matrix R_inv = spd_inverse(R, &regularized);
  const Matrix CR_inv = weights.asDiagonal() * R_inv;
  const Matrix rhs = H.transpose() * CR_inv;
  Matrix info = P_inv + rhs * H;

  const Scalar asym = (CR_inv - CR_inv.transpose()).cwiseAbs().maxCoeff();
  const Scalar scale = std::max(CR_inv.cwiseAbs().maxCoeff(), Scalar(1));
  if (asym <= Scalar(1e-14) * scale) {
    symmetrize(info);
    Eigen::LLT<Matrix> llt(info);
    if (llt.info() != Eigen::Success) {
      regularized = true;
      info += Scalar(kRidge) * Matrix::Identity(n, n);
      llt.compute(info);
    }
    out.gain = llt.solve(rhs);
  } else {
    // Correlated R with unequal weights makes the information matrix
    // non-symmetric.
    out.gain = info.fullPivLu().solve(rhs);
  }

  out.posterior.mean = prior.mean + out.gain * innovation;
  const Matrix IKH = Matrix::Identity(n, n) - out.gain * H;
  out.posterior.covariance = IKH * prior.covariance * IKH.transpose() +
                             out.gain * R * out.gain.transpose();
  symmetrize(out.posterior.covariance);
  out.posterior.time = prior.time;
  out.regularized = regularized;
  return out;
}

namespace detail {

template <typename Scalar>
void check_measurement(const VectorX<Scalar>& z,
                       const MeasurementModel<Scalar>& model) {
  if (!z.allFinite()) {
    throw MeasurementRejected("measurement from '" + model.sensor_id +
                              "' contains non-finite values");
  }
  if (z.size() != model.noise.rows()) {
    throw MeasurementRejected("measurement from '" + model.sensor_id +
                              "' has the wrong dimension");
  }
}

template <typename Scalar>
UpdateResult<Scalar> weighted_update(const GaussianBelief<Scalar>& belief,
                                     const VectorX<Scalar>& z,
                                     const MeasurementModel<Scalar>& model,
                                     bool use_kernel) {
  check_measurement(z, model);
  UpdateResult<Scalar> out;
  auto& rec = out.record;
  rec.sensor_id = model.sensor_id;
  rec.time = belief.time;
  rec.innovation = z - model.observe(belief.mean);
  rec.H = model.jacobian(belief.mean);
  rec.weights = use_kernel ? correntropy_weights<Scalar>(rec.innovation,
                                                         model.noise,
                                                         model.bandwidth)
                           : CorrentropyWeights<Scalar>::ones(z.size());

  Correction<Scalar> c = correct<Scalar>(belief, rec.innovation, rec.H,
                                         model.noise, rec.weights.weighted);
  rec.residual = z - model.observe(c.posterior.mean);
  rec.x_prior = belief.mean;
  rec.x_post = c.posterior.mean;
  rec.P_prior = belief.covariance;
  rec.P_post = c.posterior.covariance;
  rec.K = c.gain;
  rec.F = MatrixX<Scalar>::Identity(belief.dim(), belief.dim());
  rec.regularized = c.regularized;
  out.belief = std::move(c.posterior);
  return out;
}

}  // namespace detail

template <typename Scalar>
UpdateResult<Scalar> mcckf_update(const GaussianBelief<Scalar>& belief,
                                  const VectorX<Scalar>& z,
                                  const MeasurementModel<Scalar>& model) {
  for (Eigen::Index j = 0; j < model.noise.rows(); ++j) {
    if (!(model.noise(j, j) > Scalar(0)) || !(model.bandwidth(j) > Scalar(0))) {
      throw ValidationError("mcckf_update: R diagonal and bandwidth must be positive");
    }
  }
  return detail::weighted_update(belief, z, model, true);
}

template <typename Scalar>
UpdateResult<Scalar> kf_update(const GaussianBelief<Scalar>& belief,
                               const VectorX<Scalar>& z,
                               const MeasurementModel<Scalar>& model) {
  return detail::weighted_update(belief, z, model, false);
}

}  // namespace amcckf
