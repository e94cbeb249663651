#pragma once

// Error-state kinematics on SE(3) x R^3 (pose + velocity) driven by an IMU.
//
// Error state ordering is (dp, dtheta, dv), matching the odometry measurement
// layout (p, q, v) so the observation Jacobian is the 9x9 identity.
// Orientation errors are world-side: q_true = Exp(dtheta) * q_nominal.

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Geometry>

#include "amcckf/types.hpp"

namespace amcckf {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Vec9 = Eigen::Matrix<Scalar, 9, 1>;
template <typename Scalar>
using Mat9 = Eigen::Matrix<Scalar, 9, 9>;
template <typename Scalar>
using Quat = Eigen::Quaternion<Scalar>;

inline constexpr int kPos = 0;
inline constexpr int kRot = 3;
inline constexpr int kVel = 6;
inline constexpr int kErrorDim = 9;

template <typename Scalar>
struct NominalState {
  Vec3<Scalar> p = Vec3<Scalar>::Zero();
  Vec3<Scalar> v = Vec3<Scalar>::Zero();
  Quat<Scalar> q = Quat<Scalar>::Identity();  // Hamilton, (w, x, y, z)
  double time = 0.0;
};

/// Bias-compensated IMU sample in the body frame.
template <typename Scalar>
struct ImuSample {
  Vec3<Scalar> accel = Vec3<Scalar>::Zero();  // specific force, m/s^2
  Vec3<Scalar> gyro = Vec3<Scalar>::Zero();   // rad/s
  double time = 0.0;
};

template <typename Scalar>
struct OdometrySample {
  std::string sensor_id;
  Vec3<Scalar> p = Vec3<Scalar>::Zero();
  Quat<Scalar> q = Quat<Scalar>::Identity();
  Vec3<Scalar> v = Vec3<Scalar>::Zero();
  double time = 0.0;
};

template <typename Scalar>
Mat3<Scalar> skew(const Vec3<Scalar>& w) {
  Mat3<Scalar> s;
  s << Scalar(0), -w.z(), w.y(),
       w.z(), Scalar(0), -w.x(),
       -w.y(), w.x(), Scalar(0);
  return s;
}

/// Rotation vector to unit quaternion.
template <typename Scalar>
Quat<Scalar> quat_exp(const Vec3<Scalar>& rotvec) {
  const Scalar angle = rotvec.norm();
  if (angle < Scalar(1e-12)) {
    Quat<Scalar> q(Scalar(1), rotvec.x() / 2, rotvec.y() / 2, rotvec.z() / 2);
    return q.normalized();
  }
  const Scalar half = angle / 2;
  const Vec3<Scalar> xyz = rotvec / angle * std::sin(half);
  return Quat<Scalar>(std::cos(half), xyz.x(), xyz.y(), xyz.z());
}

template <typename Scalar>
struct LogResult {
  Vec3<Scalar> rotvec;
  bool antipodal = false;  // angle within 1e-9 of pi; axis sign is arbitrary
};

/// Unit quaternion to rotation vector with angle in [0, pi].
template <typename Scalar>
LogResult<Scalar> quat_log(Quat<Scalar> q) {
  if (q.w() < Scalar(0)) q.coeffs() = -q.coeffs();
  const Vec3<Scalar> xyz = q.vec();
  const Scalar n = xyz.norm();
  LogResult<Scalar> out;
  if (n < Scalar(1e-12)) {
    out.rotvec = Scalar(2) * xyz / q.w();
    return out;
  }
  const Scalar angle = Scalar(2) * std::atan2(n, q.w());
  out.rotvec = xyz / n * angle;
  out.antipodal = std::numbers::pi_v<Scalar> - angle < Scalar(1e-9);
  return out;
}

template <typename Scalar>
void check_finite(const ImuSample<Scalar>& imu) {
  if (!imu.accel.allFinite() || !imu.gyro.allFinite()) {
    throw MeasurementRejected("IMU sample contains non-finite values");
  }
}

/// First-order (Euler) nominal propagation:
///   p += v dt,  v += (R(q) a + g) dt,  q <- q * Exp(w dt).
template <typename Scalar>
NominalState<Scalar> propagate_nominal(const NominalState<Scalar>& x,
                                       const ImuSample<Scalar>& imu,
                                       const Vec3<Scalar>& gravity, Scalar dt) {
  if (!(dt > Scalar(0))) throw ValidationError("propagate_nominal: dt must be positive");
  check_finite(imu);
  NominalState<Scalar> out;
  out.p = x.p + x.v * dt;
  out.v = x.v + (x.q * imu.accel + gravity) * dt;
  out.q = (x.q * quat_exp<Scalar>(imu.gyro * dt)).normalized();
  out.time = x.time + static_cast<double>(dt);
  return out;
}

/// Jacobian of the error-state flow over one IMU step:
///   dp' = dp + dv dt,  dtheta' = dtheta,  dv' = dv - [R a]x dtheta dt.
template <typename Scalar>
Mat9<Scalar> error_transition(const NominalState<Scalar>& x,
                              const ImuSample<Scalar>& imu, Scalar dt) {
  Mat9<Scalar> F = Mat9<Scalar>::Identity();
  F.template block<3, 3>(kPos, kVel) = Mat3<Scalar>::Identity() * dt;
  F.template block<3, 3>(kVel, kRot) = -skew<Scalar>(x.q * imu.accel) * dt;
  return F;
}

template <typename Scalar>
struct ObservationResidual {
  Vec9<Scalar> y;
  Mat9<Scalar> H;
  bool antipodal = false;
};

/// Odometry innovation z - h(x) in error-state coordinates.
template <typename Scalar>
ObservationResidual<Scalar> observation_residual(const NominalState<Scalar>& x,
                                                 const OdometrySample<Scalar>& z) {
  ObservationResidual<Scalar> out;
  const LogResult<Scalar> rot = quat_log<Scalar>(z.q * x.q.conjugate());
  out.y.template segment<3>(kPos) = z.p - x.p;
  out.y.template segment<3>(kRot) = rot.rotvec;
  out.y.template segment<3>(kVel) = z.v - x.v;
  out.H.setIdentity();
  out.antipodal = rot.antipodal;
  return out;
}

/// x <- x (+) dx. The error state is implicitly reset to zero; the error
/// covariance is left unchanged (first-order reset).
template <typename Scalar>
NominalState<Scalar> inject_and_reset(const NominalState<Scalar>& x,
                                      const Vec9<Scalar>& dx) {
  NominalState<Scalar> out = x;
  out.p += dx.template segment<3>(kPos);
  out.v += dx.template segment<3>(kVel);
  out.q = (quat_exp<Scalar>(dx.template segment<3>(kRot)) * x.q).normalized();
  return out;
}

/// Error of `truth` relative to `estimate`, (dp, dtheta, dv).
template <typename Scalar>
Vec9<Scalar> state_difference(const NominalState<Scalar>& truth,
                              const NominalState<Scalar>& estimate) {
  Vec9<Scalar> d;
  d.template segment<3>(kPos) = truth.p - estimate.p;
  d.template segment<3>(kRot) = quat_log<Scalar>(truth.q * estimate.q.conjugate()).rotvec;
  d.template segment<3>(kVel) = truth.v - estimate.v;
  return d;
}

}  // namespace amcckf
